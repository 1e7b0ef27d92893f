// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <httplib.h>

#include <memory>
#include <string>
#include <string_view>

namespace coursekb::detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // always starts with '/'
};

/// Splits an http(s) URL into the origin httplib::Client wants and the path.
/// Returns an empty origin when the URL has no scheme.
inline SplitUrl split_url(std::string_view url) {
    SplitUrl out;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) return out;
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) {
        out.origin = std::string(url);
        out.path = "/";
    } else {
        out.origin = std::string(url.substr(0, path_start));
        out.path = std::string(url.substr(path_start));
    }
    while (out.path.size() > 1 && out.path.back() == '/') out.path.pop_back();
    return out;
}

inline std::string join_path(const std::string& base, std::string_view tail) {
    if (base == "/") return "/" + std::string(tail);
    return base + "/" + std::string(tail);
}

inline std::unique_ptr<httplib::Client> make_client(const std::string& origin, int timeout_seconds = 30) {
    auto client = std::make_unique<httplib::Client>(origin);
    client->set_connection_timeout(timeout_seconds, 0);
    client->set_read_timeout(timeout_seconds, 0);
    client->set_write_timeout(timeout_seconds, 0);
    return client;
}

}  // namespace coursekb::detail
