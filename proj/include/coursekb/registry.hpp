// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/index.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace coursekb {

/// Loaded indices by course slug. Readers receive an immutable snapshot, so a
/// concurrent publish() swaps versions without readers ever observing a mix.
class IndexRegistry {
public:
    explicit IndexRegistry(const ObjectStore& store) : store_(store) {}

    /// Snapshot for the course, loading from the store on first use.
    /// Throws index_not_found when nothing is persisted.
    std::shared_ptr<const CourseIndex> get(const std::string& course_slug);
    /// Snapshot if loaded or loadable, nullptr when no index exists.
    std::shared_ptr<const CourseIndex> find(const std::string& course_slug);
    void publish(const std::string& course_slug, std::shared_ptr<const CourseIndex> index);
    void evict(const std::string& course_slug);

private:
    const ObjectStore& store_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<const CourseIndex>> loaded_;
};

}  // namespace coursekb
