// SPDX-License-Identifier: Apache-2.0
#include "coursekb/registry.hpp"

#include "coursekb/error.hpp"

namespace coursekb {

std::shared_ptr<const CourseIndex> IndexRegistry::get(const std::string& course_slug) {
    {
        std::lock_guard lock(mu_);
        if (auto it = loaded_.find(course_slug); it != loaded_.end()) return it->second;
    }
    // Load outside the lock; a racing loader or publisher may win, and the
    // newer manifest version is kept.
    auto fresh = std::make_shared<const CourseIndex>(load_index(course_slug, store_));
    std::lock_guard lock(mu_);
    auto& slot = loaded_[course_slug];
    if (!slot || slot->manifest_version < fresh->manifest_version) slot = std::move(fresh);
    return slot;
}

std::shared_ptr<const CourseIndex> IndexRegistry::find(const std::string& course_slug) {
    try {
        return get(course_slug);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::index_not_found) return nullptr;
        throw;
    }
}

void IndexRegistry::publish(const std::string& course_slug, std::shared_ptr<const CourseIndex> index) {
    std::lock_guard lock(mu_);
    loaded_[course_slug] = std::move(index);
}

void IndexRegistry::evict(const std::string& course_slug) {
    std::lock_guard lock(mu_);
    loaded_.erase(course_slug);
}

}  // namespace coursekb
