// SPDX-License-Identifier: Apache-2.0
#include "coursekb/api.hpp"

#include "support/support.hpp"

#include <doctest.h>

#include <map>
#include <regex>

using namespace coursekb;
using testkit::json;

namespace {

constexpr const char* kNotes =
    "Decision trees split on entropy.\n\nRandom forests average decision trees.\n\nBoosting fits residuals.";

/// A course with an index and a quiz, plus an owner and an ungranted learner,
/// all reachable through a live server.
struct Site {
    testkit::Harness h = testkit::make_harness();
    testkit::LiveServer server{*h};
    testkit::ApiClient owner = server.client();
    testkit::ApiClient learner = server.client();
    std::int64_t owner_id = 0;
    std::int64_t learner_id = 0;

    std::int64_t signup(testkit::ApiClient& c, const std::string& name, const std::string& role) {
        auto r = c.send("POST", "/auth/register",
                        {{"username", name}, {"email", name + "@example.org"}, {"password", "password-" + name},
                         {"role", role}});
        REQUIRE(r.status == 201);
        const auto id = r.as_json().at("user_id").get<std::int64_t>();
        REQUIRE(c.send("POST", "/auth/pay", {{"user_id", id}}).status == 200);
        r = c.send("POST", "/auth/login", {{"username", name}, {"password", "password-" + name}});
        REQUIRE(r.status == 200);
        c.set_token(r.as_json().at("token").get<std::string>());
        return id;
    }

    Site() {
        owner_id = signup(owner, "prof", "instructor");
        learner_id = signup(learner, "lee", "learner");
    }

    std::int64_t course(const std::string& title, const std::string& visibility) {
        auto r = owner.send("POST", "/courses", {{"title", title}, {"visibility", visibility}});
        REQUIRE(r.status == 201);
        return r.as_json().at("course_id").get<std::int64_t>();
    }

    void upload_and_wait(std::int64_t course_id, const std::string& body = kNotes) {
        auto r = owner.upload("/courses/" + std::to_string(course_id) + "/documents", "notes.txt", body, "txt");
        REQUIRE(r.status == 202);
        const auto job = owner.wait_job(r.as_json().at("job_id").get<std::string>());
        REQUIRE(job.at("status") == "done");
    }
};

/// A valid request for each read route, given the course and a quiz in it.
struct Probe {
    std::string method;
    std::string path;
    json body;
};

std::map<std::string, Probe> read_probes(std::int64_t course, std::int64_t quiz) {
    const auto c = "/courses/" + std::to_string(course);
    const auto q = "/quizzes/" + std::to_string(quiz);
    return {
        {"GET /courses/{id}", {"GET", c, {}}},
        {"GET /courses/{id}/documents", {"GET", c + "/documents", {}}},
        {"GET /courses/{id}/chunks", {"GET", c + "/chunks", {}}},
        {"GET /courses/{id}/search", {"GET", c + "/search?q=decision%20trees&k=2", {}}},
        {"POST /courses/{id}/chat", {"POST", c + "/chat", {{"question", "What do forests average?"}}}},
        {"GET /courses/{id}/turns", {"GET", c + "/turns", {}}},
        {"GET /courses/{id}/quizzes", {"GET", c + "/quizzes", {}}},
        {"POST /courses/{id}/sessions", {"POST", c + "/sessions", json::object()}},
        {"GET /quizzes/{id}", {"GET", q, {}}},
        {"POST /quizzes/{id}/attempts", {"POST", q + "/attempts", {{"answers", {0}}}}},
    };
}

std::string concrete(const std::string& pattern) { return std::regex_replace(pattern, std::regex(R"(\{[a-z_]+\})"), "1"); }

}  // namespace

TEST_SUITE("api") {

TEST_CASE("every non-open route rejects missing and bogus tokens with a JSON 401") {
    Site s;
    auto anon = s.server.client();
    for (const auto& r : api::routes()) {
        if (r.access == api::Access::open) continue;
        CAPTURE(r.method);
        CAPTURE(r.pattern);
        for (const std::string token : {"", "not-a-real-token"}) {
            const auto res = anon.send(r.method, concrete(r.pattern), json::object(), token);
            CHECK(res.status == 401);
            CHECK(res.as_json().at("code") == "unauthorized");
        }
    }
}

TEST_CASE("only register, login, pay and password reset are open") {
    std::set<std::string> open;
    for (const auto& r : api::routes()) {
        if (r.access == api::Access::open) open.insert(r.method + " " + r.pattern);
    }
    CHECK(open == std::set<std::string>{"POST /auth/register", "POST /auth/pay", "POST /auth/login",
                                        "POST /auth/password-reset", "POST /auth/password-reset/confirm"});
}

TEST_CASE("privacy: every read endpoint denies, then allows after a grant, then denies after revocation") {
    Site s;
    const auto course = s.course("Secret Trees", "private");
    s.upload_and_wait(course);
    auto qr = s.owner.send("POST", "/courses/" + std::to_string(course) + "/quizzes",
                           {{"module_label", "Module 1"},
                            {"questions",
                             {{{"question_text", "Forests average?"}, {"options", {"trees", "a", "b", "c"}},
                               {"correct_index", 0}}}}});
    REQUIRE(qr.status == 201);
    const auto quiz = qr.as_json().at("quiz_id").get<std::int64_t>();
    const auto probes = read_probes(course, quiz);

    // Coverage: the probe table names exactly the read routes.
    std::set<std::string> read_routes, probed;
    for (const auto& r : api::routes()) {
        if (r.access == api::Access::course_read || r.access == api::Access::quiz_read) {
            read_routes.insert(r.method + " " + r.pattern);
        }
    }
    for (const auto& [name, _] : probes) probed.insert(name);
    REQUIRE(read_routes == probed);

    const auto sweep = [&](bool expect_allowed) {
        for (const auto& [name, p] : probes) {
            CAPTURE(name);
            const auto res = s.learner.send(p.method, p.path, p.body);
            if (expect_allowed) {
                CHECK(res.status >= 200);
                CHECK(res.status < 300);
            } else {
                CHECK(res.status == 403);
                CHECK(res.as_json().at("code") == "access_denied");
            }
        }
    };
    sweep(false);
    const auto grants = "/courses/" + std::to_string(course) + "/grants";
    REQUIRE(s.owner.send("POST", grants, {{"user_id", s.learner_id}}).status == 201);
    sweep(true);
    REQUIRE(s.owner.send("DELETE", grants + "/" + std::to_string(s.learner_id)).status == 204);
    sweep(false);
}

TEST_CASE("owner-only routes refuse readers") {
    Site s;
    const auto course = s.course("Open Trees", "public");
    s.upload_and_wait(course);
    const auto c = "/courses/" + std::to_string(course);
    CHECK(s.learner.send("GET", c + "/analytics/weak-modules").status == 403);
    CHECK(s.learner.send("GET", c + "/analytics/time").status == 403);
    CHECK(s.learner.send("GET", c + "/grants").status == 403);
    CHECK(s.learner.send("POST", c + "/quizzes", {{"module_label", "x"}}).status == 403);
    CHECK(s.learner.upload(c + "/documents", "x.txt", "hello", "txt").status == 403);
    CHECK(s.learner.send("POST", c + "/youtube", {{"url", "https://youtu.be/intro0ML001"}}).status == 403);
    // Public courses are readable without a grant.
    CHECK(s.learner.send("GET", c).status == 200);
}

TEST_CASE("chat before the first upload is index_not_found") {
    Site s;
    const auto course = s.course("Blank", "public");
    const auto r = s.owner.send("POST", "/courses/" + std::to_string(course) + "/chat", {{"question", "anything?"}});
    CHECK(r.status == 404);
    CHECK(r.as_json().at("code") == "index_not_found");
}

TEST_CASE("errors are JSON with a code and message") {
    Site s;
    auto anon = s.server.client();
    auto r = anon.send("GET", "/no/such/route");
    CHECK(r.status == 404);
    CHECK(r.as_json().at("code") == "not_found");

    r = anon.send("POST", "/auth/login", {{"username", "prof"}, {"password", "wrong-password"}});
    CHECK(r.status == 401);
    CHECK(r.as_json().at("code") == "invalid_credentials");
    CHECK(r.content_type.find("application/json") == 0);

    r = anon.send("POST", "/auth/register", {{"username", "x"}});
    CHECK(r.status == 400);
    CHECK(r.as_json().contains("message"));

    r = s.owner.send("GET", "/courses/424242");
    CHECK(r.status == 404);
    CHECK(r.as_json().at("code") == "course_not_found");

    r = s.owner.send("POST", "/courses", {{"title", "t"}, {"visibility", "secret"}});
    CHECK(r.status == 400);
}

TEST_CASE("registration without payment cannot log in") {
    Site s;
    auto anon = s.server.client();
    auto r = anon.send("POST", "/auth/register",
                       {{"username", "late"}, {"email", "late@example.org"}, {"password", "password-late"},
                        {"role", "learner"}});
    REQUIRE(r.status == 201);
    CHECK(r.as_json().at("status") == "payment_required");
    r = anon.send("POST", "/auth/login", {{"username", "late"}, {"password", "password-late"}});
    CHECK(r.status == 402);
    CHECK(r.as_json().at("code") == "payment_required");
}

TEST_CASE("password reset over http") {
    Site s;
    auto anon = s.server.client();
    CHECK(anon.send("POST", "/auth/password-reset", {{"username", "nobody"}}).status == 202);
    CHECK(s.h.resets->empty());
    CHECK(anon.send("POST", "/auth/password-reset", {{"username", "lee"}}).status == 202);
    REQUIRE(s.h.resets->size() == 1);
    const auto token = s.h.resets->front().second;
    CHECK(anon.send("POST", "/auth/password-reset/confirm", {{"reset_token", token}, {"new_password", "fresh-secret"}})
              .status == 204);
    CHECK(s.learner.send("GET", "/me").status == 401);
    CHECK(anon.send("POST", "/auth/login", {{"username", "lee"}, {"password", "fresh-secret"}}).status == 200);
}

TEST_CASE("index jobs run one at a time per course, in submission order") {
    Site s;
    const auto a = s.course("Course A", "public");
    const auto b = s.course("Course B", "public");

    std::mutex mu;
    std::map<courses::CourseId, int> active;
    std::map<courses::CourseId, int> peak;
    int overall_peak = 0;
    int running = 0;
    s.h->set_build_hook([&](courses::CourseId id) {
        {
            std::lock_guard lk(mu);
            peak[id] = std::max(peak[id], ++active[id]);
            overall_peak = std::max(overall_peak, ++running);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(40));
        std::lock_guard lk(mu);
        --active[id];
        --running;
    });

    std::vector<std::pair<std::int64_t, std::string>> jobs;
    for (int i = 0; i < 3; ++i) {
        for (auto course : {a, b}) {
            auto r = s.owner.upload("/courses/" + std::to_string(course) + "/documents", "part.txt",
                                    "Part " + std::to_string(i) + " covers topic" + std::to_string(i) + ".", "txt");
            REQUIRE(r.status == 202);
            jobs.emplace_back(course, r.as_json().at("job_id").get<std::string>());
        }
    }
    std::map<std::int64_t, std::uint64_t> last_version;
    for (const auto& [course, job_id] : jobs) {
        const auto j = s.owner.wait_job(job_id);
        REQUIRE(j.at("status") == "done");
        const auto v = j.at("manifest_version").get<std::uint64_t>();
        CHECK(v == last_version[course] + 1);
        last_version[course] = v;
    }
    CHECK(peak[a] == 1);
    CHECK(peak[b] == 1);
    CHECK(overall_peak == 2);  // two workers, two courses: they overlap

    const auto chunks = s.owner.send("GET", "/courses/" + std::to_string(a) + "/chunks").as_json();
    CHECK(chunks.at("manifest_version") == 3);
    CHECK(chunks.at("chunks").size() == 3);
}

TEST_CASE("transcripts are fetched and cleaned before a job is queued") {
    Site s;
    const auto course = s.course("Transcripts", "public");
    const auto path = "/courses/" + std::to_string(course) + "/youtube";
    auto r = s.owner.send("POST", path, {{"url", "https://youtu.be/allArtifact"}});
    CHECK(r.status == 422);
    CHECK(r.as_json().at("code") == "empty_transcript");
    r = s.owner.send("POST", path, {{"url", "https://youtu.be/noCaptions1"}});
    CHECK(r.status == 424);
    r = s.owner.send("POST", path, {{"url", "https://example.com/v"}});
    CHECK(r.as_json().at("code") == "malformed_url");

    r = s.owner.send("POST", path, {{"url", "https://www.youtube.com/watch?v=multiLang01"}, {"preferred_langs", {"de"}}});
    REQUIRE(r.status == 202);
    const auto job = s.owner.wait_job(r.as_json().at("job_id").get<std::string>());
    CHECK(job.at("status") == "done");
    const auto chunks = s.owner.send("GET", "/courses/" + std::to_string(course) + "/chunks").as_json();
    REQUIRE(chunks.at("chunks").size() == 2);
    CHECK(chunks.at("chunks").at(0).at("text") == "Regularisierung");
    CHECK(chunks.at("chunks").at(1).at("text") == "Hallo Welt");
}

TEST_CASE("uploads with an unsupported declared format are rejected up front") {
    Site s;
    const auto course = s.course("Formats", "public");
    const auto r = s.owner.upload("/courses/" + std::to_string(course) + "/documents", "slides.pdf", "%PDF", "pdf");
    CHECK(r.status == 415);
    CHECK(r.as_json().at("code") == "unsupported_format");
}

}  // TEST_SUITE
