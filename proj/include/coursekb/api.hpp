// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/service.hpp"

#include <memory>
#include <string>
#include <thread>
#include <vector>

namespace coursekb::api {

/// Who may call a route. Everything except `open` needs a bearer token; the
/// finer classes are checked against the addressed course, quiz, job or
/// session inside the handler.
enum class Access {
    open,           // register, login, pay, password reset
    authenticated,  // any signed-in user
    course_read,    // course owner, or any reader of a public course, or a grantee
    course_owner,   // instructor who owns the course
    quiz_read,      // reader of the quiz's course
    job_owner,      // owner of the job's course
    session_owner,  // user who opened the session
};

std::string_view access_name(Access a) noexcept;

struct RouteSpec {
    std::string method;
    std::string pattern;  // "/courses/{id}/chat"
    Access access;
};

/// The published route table; the server registers exactly these.
const std::vector<RouteSpec>& routes();

struct ServerOptions {
    bool access_log = false;  // one "METHOD path status" line per request on stderr
    std::size_t max_upload_bytes = 64u << 20;
};

class Server {
public:
    explicit Server(Platform& platform, ServerOptions options = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds host:port; port 0 picks a free one. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run();
    /// Serves on a background thread.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
};

/// Splits "host:port" (port defaults to 8080).
std::pair<std::string, int> parse_listen_addr(const std::string& addr);

}  // namespace coursekb::api
