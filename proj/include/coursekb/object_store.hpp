// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace coursekb {

/// Flat key/value blob store keyed by "/"-separated UTF-8 paths.
/// Implementations must tolerate concurrent get/list; failures surface as
/// ErrorCode::store_unavailable, missing keys as ErrorCode::not_found.
class ObjectStore {
public:
    virtual ~ObjectStore() = default;
    virtual void put(const std::string& key, std::string_view bytes) = 0;
    virtual std::string get(const std::string& key) const = 0;
    virtual bool exists(const std::string& key) const;
    /// Keys starting with `prefix`, sorted.
    virtual std::vector<std::string> list(const std::string& prefix) const = 0;
    /// Deleting a missing key is not an error.
    virtual void remove(const std::string& key) = 0;
};

/// Throws invalid_argument for empty keys, leading '/', "." or ".." segments.
void validate_key(std::string_view key);

/// Files under a root directory; puts go through a temp file and rename so a
/// reader never observes a partially written object.
class FsObjectStore : public ObjectStore {
public:
    explicit FsObjectStore(std::filesystem::path root);
    void put(const std::string& key, std::string_view bytes) override;
    std::string get(const std::string& key) const override;
    bool exists(const std::string& key) const override;
    std::vector<std::string> list(const std::string& prefix) const override;
    void remove(const std::string& key) override;

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::filesystem::path root_;
    std::mutex dirs_mu_;  // directory creation vs. pruning of empty ones
};

class MemoryObjectStore : public ObjectStore {
public:
    void put(const std::string& key, std::string_view bytes) override;
    std::string get(const std::string& key) const override;
    bool exists(const std::string& key) const override;
    std::vector<std::string> list(const std::string& prefix) const override;
    void remove(const std::string& key) override;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::string, std::less<>> objects_;
};

/// Plain HTTP object service, path-style:
///   PUT/GET/DELETE <base>/<key>, GET <base>/?prefix=<p> -> {"keys": [...]}.
class HttpObjectStore : public ObjectStore {
public:
    explicit HttpObjectStore(std::string base_url, std::string bearer_token = {});
    void put(const std::string& key, std::string_view bytes) override;
    std::string get(const std::string& key) const override;
    bool exists(const std::string& key) const override;
    std::vector<std::string> list(const std::string& prefix) const override;
    void remove(const std::string& key) override;

private:
    std::string base_url_;
    std::string bearer_token_;
};

}  // namespace coursekb
