// SPDX-License-Identifier: Apache-2.0
#include "coursekb/object_store.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"
#include "http_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace coursekb {

namespace fs = std::filesystem;

bool ObjectStore::exists(const std::string& key) const {
    try {
        (void)get(key);
        return true;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::not_found) return false;
        throw;
    }
}

void validate_key(std::string_view key) {
    if (key.empty() || key.front() == '/' || key.back() == '/') {
        fail(ErrorCode::invalid_argument, "invalid object key '" + std::string(key) + "'");
    }
    std::size_t pos = 0;
    while (pos <= key.size()) {
        auto slash = key.find('/', pos);
        if (slash == std::string_view::npos) slash = key.size();
        const auto segment = key.substr(pos, slash - pos);
        if (segment.empty() || segment == "." || segment == "..") {
            fail(ErrorCode::invalid_argument, "invalid object key '" + std::string(key) + "'");
        }
        pos = slash + 1;
    }
    if (key.find('\0') != std::string_view::npos || !text::is_valid_utf8(key)) {
        fail(ErrorCode::invalid_argument, "object keys must be UTF-8 without NUL");
    }
}

// ---- FsObjectStore ---------------------------------------------------------

FsObjectStore::FsObjectStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) fail(ErrorCode::store_unavailable, "cannot create store root " + root_.string() + ": " + ec.message());
}

void FsObjectStore::put(const std::string& key, std::string_view bytes) {
    validate_key(key);
    const auto path = root_ / fs::path(key);
    std::error_code ec;
    std::lock_guard dirs(dirs_mu_);
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::store_unavailable, "cannot create directory for " + key);

    const auto tmp = path.parent_path() / ("." + path.filename().string() + ".tmp-" + text::random_hex(6));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            fail(ErrorCode::store_unavailable, "write failed for " + key);
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::store_unavailable, "rename failed for " + key);
    }
}

std::string FsObjectStore::get(const std::string& key) const {
    validate_key(key);
    const auto path = root_ / fs::path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::not_found, "no object at " + key);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool FsObjectStore::exists(const std::string& key) const {
    validate_key(key);
    std::error_code ec;
    return fs::is_regular_file(root_ / fs::path(key), ec);
}

std::vector<std::string> FsObjectStore::list(const std::string& prefix) const {
    std::vector<std::string> keys;
    std::error_code ec;
    // Walk only the deepest directory fully named by the prefix.
    const auto last_slash = prefix.rfind('/');
    const auto dir = last_slash == std::string::npos ? root_ : root_ / fs::path(prefix.substr(0, last_slash));
    if (!fs::is_directory(dir, ec)) return keys;
    for (auto it = fs::recursive_directory_iterator(dir, ec); it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (ec) fail(ErrorCode::store_unavailable, "cannot list " + prefix);
        if (!it->is_regular_file(ec)) continue;
        auto rel = fs::relative(it->path(), root_, ec).generic_string();
        const auto name = it->path().filename().string();
        if (name.starts_with(".") && name.find(".tmp-") != std::string::npos) continue;
        if (rel.starts_with(prefix)) keys.push_back(std::move(rel));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

void FsObjectStore::remove(const std::string& key) {
    validate_key(key);
    std::error_code ec;
    fs::remove(root_ / fs::path(key), ec);
    if (ec && ec != std::errc::no_such_file_or_directory) fail(ErrorCode::store_unavailable, "cannot delete " + key);
    // Prune directories left empty; fs::remove refuses non-empty ones.
    std::lock_guard dirs(dirs_mu_);
    for (auto dir = (root_ / fs::path(key)).parent_path(); dir != root_ && dir.has_relative_path();
         dir = dir.parent_path()) {
        if (!fs::remove(dir, ec) || ec) break;
    }
}

// ---- MemoryObjectStore -----------------------------------------------------

void MemoryObjectStore::put(const std::string& key, std::string_view bytes) {
    validate_key(key);
    std::lock_guard lock(mu_);
    objects_[key] = std::string(bytes);
}

std::string MemoryObjectStore::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = objects_.find(key);
    if (it == objects_.end()) fail(ErrorCode::not_found, "no object at " + key);
    return it->second;
}

bool MemoryObjectStore::exists(const std::string& key) const {
    std::lock_guard lock(mu_);
    return objects_.contains(key);
}

std::vector<std::string> MemoryObjectStore::list(const std::string& prefix) const {
    std::lock_guard lock(mu_);
    std::vector<std::string> keys;
    for (auto it = objects_.lower_bound(prefix); it != objects_.end() && it->first.starts_with(prefix); ++it) {
        keys.push_back(it->first);
    }
    return keys;
}

void MemoryObjectStore::remove(const std::string& key) {
    std::lock_guard lock(mu_);
    objects_.erase(key);
}

// ---- HttpObjectStore -------------------------------------------------------

namespace {

std::string encode_key(std::string_view key) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (char ch : key) {
        const auto c = static_cast<unsigned char>(ch);
        const bool unreserved = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                                c == '-' || c == '_' || c == '.' || c == '~' || c == '/';
        if (unreserved) {
            out.push_back(ch);
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

}  // namespace

HttpObjectStore::HttpObjectStore(std::string base_url, std::string bearer_token)
    : base_url_(std::move(base_url)), bearer_token_(std::move(bearer_token)) {}

void HttpObjectStore::put(const std::string& key, std::string_view bytes) {
    validate_key(key);
    const auto url = detail::split_url(base_url_);
    auto client = detail::make_client(url.origin);
    httplib::Headers headers;
    if (!bearer_token_.empty()) headers.emplace("Authorization", "Bearer " + bearer_token_);
    auto res = client->Put(detail::join_path(url.path, encode_key(key)), headers, bytes.data(), bytes.size(),
                           "application/octet-stream");
    if (!res || res->status / 100 != 2) fail(ErrorCode::store_unavailable, "PUT failed for " + key);
}

std::string HttpObjectStore::get(const std::string& key) const {
    validate_key(key);
    const auto url = detail::split_url(base_url_);
    auto client = detail::make_client(url.origin);
    httplib::Headers headers;
    if (!bearer_token_.empty()) headers.emplace("Authorization", "Bearer " + bearer_token_);
    auto res = client->Get(detail::join_path(url.path, encode_key(key)), headers);
    if (!res) fail(ErrorCode::store_unavailable, "GET failed for " + key);
    if (res->status == 404) fail(ErrorCode::not_found, "no object at " + key);
    if (res->status != 200) fail(ErrorCode::store_unavailable, "GET failed for " + key);
    return res->body;
}

bool HttpObjectStore::exists(const std::string& key) const { return ObjectStore::exists(key); }

std::vector<std::string> HttpObjectStore::list(const std::string& prefix) const {
    const auto url = detail::split_url(base_url_);
    auto client = detail::make_client(url.origin);
    httplib::Headers headers;
    if (!bearer_token_.empty()) headers.emplace("Authorization", "Bearer " + bearer_token_);
    auto res = client->Get(url.path == "/" ? "/" : url.path + "/", httplib::Params{{"prefix", prefix}}, headers);
    if (!res || res->status != 200) fail(ErrorCode::store_unavailable, "LIST failed for " + prefix);
    std::vector<std::string> keys;
    try {
        keys = nlohmann::json::parse(res->body).at("keys").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::store_unavailable, "malformed listing for " + prefix);
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

void HttpObjectStore::remove(const std::string& key) {
    validate_key(key);
    const auto url = detail::split_url(base_url_);
    auto client = detail::make_client(url.origin);
    httplib::Headers headers;
    if (!bearer_token_.empty()) headers.emplace("Authorization", "Bearer " + bearer_token_);
    auto res = client->Delete(detail::join_path(url.path, encode_key(key)), headers);
    if (!res || (res->status / 100 != 2 && res->status != 404)) {
        fail(ErrorCode::store_unavailable, "DELETE failed for " + key);
    }
}

}  // namespace coursekb
