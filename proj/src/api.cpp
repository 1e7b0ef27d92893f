// SPDX-License-Identifier: Apache-2.0
#include "coursekb/api.hpp"

#include "coursekb/error.hpp"
#include "coursekb/index.hpp"
#include "coursekb/prompts.hpp"
#include "coursekb/retrieve.hpp"
#include "coursekb/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <charconv>
#include <functional>
#include <iostream>
#include <regex>

namespace coursekb::api {

using nlohmann::json;
using courses::CourseId;
using courses::UserAccount;

std::string_view access_name(Access a) noexcept {
    switch (a) {
        case Access::open: return "open";
        case Access::authenticated: return "authenticated";
        case Access::course_read: return "course_read";
        case Access::course_owner: return "course_owner";
        case Access::quiz_read: return "quiz_read";
        case Access::job_owner: return "job_owner";
        case Access::session_owner: return "session_owner";
    }
    return "open";
}

std::pair<std::string, int> parse_listen_addr(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) return {addr.empty() ? "127.0.0.1" : addr, 8080};
    int port = 0;
    const auto* first = addr.data() + colon + 1;
    const auto* last = addr.data() + addr.size();
    if (auto [p, ec] = std::from_chars(first, last, port); ec != std::errc{} || p != last || port < 0 || port > 65535) {
        fail(ErrorCode::invalid_argument, "LISTEN_ADDR port is not a number: " + addr);
    }
    return {colon == 0 ? "0.0.0.0" : addr.substr(0, colon), port};
}

namespace {

// ---- request context --------------------------------------------------------

struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";

    static Reply of(const json& j, int status = 200) { return {status, j.dump(), "application/json"}; }
    static Reply empty() { return {204, "", "application/json"}; }
};

struct Ctx {
    const httplib::Request& req;
    Platform& platform;
    std::optional<UserAccount> user;  // set for every non-open route

    const UserAccount& actor() const { return *user; }

    std::string param(std::size_t i) const { return req.matches[static_cast<int>(i)].str(); }

    std::int64_t id_param(std::size_t i) const {
        const auto s = param(i);
        std::int64_t v = 0;
        if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v); ec != std::errc{} || p != s.data() + s.size()) {
            fail(ErrorCode::invalid_argument, "path id must be an integer: " + s);
        }
        return v;
    }

    json body() const {
        if (req.body.empty()) return json::object();
        try {
            auto j = json::parse(req.body);
            if (!j.is_object()) fail(ErrorCode::invalid_argument, "request body must be a JSON object");
            return j;
        } catch (const json::parse_error&) {
            fail(ErrorCode::invalid_argument, "request body is not valid JSON");
        }
    }

    std::optional<std::string> query(const std::string& key) const {
        if (!req.has_param(key)) return std::nullopt;
        return req.get_param_value(key);
    }

    std::optional<double> query_double(const std::string& key) const {
        auto v = query(key);
        if (!v) return std::nullopt;
        try {
            std::size_t used = 0;
            const double d = std::stod(*v, &used);
            if (used != v->size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            fail(ErrorCode::invalid_argument, key + " must be a number");
        }
    }

    std::optional<std::int64_t> query_int(const std::string& key) const {
        auto v = query(key);
        if (!v) return std::nullopt;
        std::int64_t out = 0;
        if (auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out); ec != std::errc{} || p != v->data() + v->size()) {
            fail(ErrorCode::invalid_argument, key + " must be an integer");
        }
        return out;
    }
};

template <typename T>
T field(const json& body, const char* key) {
    if (!body.contains(key)) fail(ErrorCode::invalid_argument, std::string("missing field '") + key + "'");
    try {
        return body.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::invalid_argument, std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> opt_field(const json& body, const char* key) {
    if (!body.contains(key) || body.at(key).is_null()) return std::nullopt;
    return field<T>(body, key);
}

// ---- JSON views ---------------------------------------------------------------

json user_json(const UserAccount& u) {
    return {{"user_id", u.user_id}, {"username", u.username}, {"email", u.email},
            {"role", courses::role_name(u.role)}, {"created_at", text::iso8601_utc(u.created_at_ms)}};
}

json course_json(const courses::Course& c) {
    return {{"course_id", c.course_id},
            {"title", c.title},
            {"slug", c.slug},
            {"visibility", c.visibility == courses::Visibility::private_ ? "private" : "public"},
            {"owner_id", c.owner_id},
            {"created_at", text::iso8601_utc(c.created_at_ms)}};
}

json payment_json(const courses::PaymentRecord& p) {
    return {{"payment_id", p.payment_id},
            {"user_id", p.user_id},
            {"plan", courses::plan_name(p.plan)},
            {"amount", p.amount},
            {"merchant_txn_id", p.merchant_txn_id},
            {"status", courses::payment_status_name(p.status)}};
}

json turn_json(const chat::ChatTurn& t) {
    json j = {{"turn_id", t.turn_id},
              {"user_id", t.user_id},
              {"course_id", t.course_id},
              {"mode", mode_name(t.mode)},
              {"question", t.question},
              {"context_chunk_ids", t.context_chunk_ids},
              {"answer", t.answer},
              {"model_id", t.model_id},
              {"created_at", text::iso8601_utc(t.created_at_ms)},
              {"created_at_ms", t.created_at_ms},
              {"latency_ms", t.latency_ms}};
    j["error"] = t.error ? json(*t.error) : json(nullptr);
    return j;
}

json quiz_json(const analytics::Quiz& q, bool with_answers) {
    json questions = json::array();
    for (const auto& item : q.questions) {
        json qj = {{"question_text", item.question_text}, {"options", item.options}};
        if (with_answers) qj["correct_index"] = item.correct_index;
        questions.push_back(std::move(qj));
    }
    return {{"quiz_id", q.quiz_id}, {"course_id", q.course_id}, {"module_label", q.module_label},
            {"source", q.source}, {"questions", std::move(questions)}};
}

json session_json(const analytics::SessionLog& s) {
    json j = {{"session_id", s.session_id}, {"user_id", s.user_id}, {"course_id", s.course_id},
              {"started_at_ms", s.started_at_ms}};
    j["ended_at_ms"] = s.ended_at_ms ? json(*s.ended_at_ms) : json(nullptr);
    return j;
}

json job_json(const JobInfo& j) {
    json out = {{"job_id", j.job_id}, {"course_id", j.course_id}, {"kind", j.kind}, {"doc_id", j.doc_id},
                {"status", job_status_name(j.status)}};
    out["manifest_version"] = j.manifest_version ? json(*j.manifest_version) : json(nullptr);
    out["error"] = j.error ? json(*j.error) : json(nullptr);
    return out;
}

json error_json(std::string_view code, std::string_view message) {
    return {{"code", code}, {"message", message}};
}

// ---- handlers -------------------------------------------------------------------

using Handler = std::function<Reply(Ctx&)>;

Reply auth_register(Ctx& c) {
    const auto body = c.body();
    const auto role = courses::parse_role(field<std::string>(body, "role"));
    const auto plan_name = opt_field<std::string>(body, "plan");
    const auto plan = plan_name ? courses::parse_plan(*plan_name)
                                : (role == courses::Role::instructor ? courses::Plan::instructor_basic
                                                                     : courses::Plan::learner_basic);
    const auto id = c.platform.directory().register_user(field<std::string>(body, "username"),
                                                          field<std::string>(body, "email"),
                                                          field<std::string>(body, "password"), role, plan);
    return Reply::of({{"user_id", id}, {"status", "payment_required"}, {"plan", courses::plan_name(plan)}}, 201);
}

Reply auth_pay(Ctx& c) {
    const auto body = c.body();
    const auto user_id = field<std::int64_t>(body, "user_id");
    const auto user = c.platform.directory().find_user(user_id);
    if (!user) fail(ErrorCode::not_found, "no such user");
    const auto plan_name = opt_field<std::string>(body, "plan");
    const auto plan = plan_name ? courses::parse_plan(*plan_name)
                                : (user->role == courses::Role::instructor ? courses::Plan::instructor_basic
                                                                           : courses::Plan::learner_basic);
    return Reply::of(payment_json(c.platform.directory().process_payment(user_id, plan)));
}

Reply auth_login(Ctx& c) {
    const auto body = c.body();
    const auto username = field<std::string>(body, "username");
    const auto token = c.platform.directory().login(username, field<std::string>(body, "password"));
    const auto user = c.platform.directory().authenticate(token.token);
    return Reply::of({{"token", token.token},
                      {"expires_at", text::iso8601_utc(token.expires_at_ms)},
                      {"expires_at_ms", token.expires_at_ms},
                      {"user", user_json(user)}});
}

Reply auth_logout(Ctx& c) {
    const auto header = c.req.get_header_value("Authorization");
    c.platform.directory().logout(header.substr(7));
    return Reply::empty();
}

Reply password_reset(Ctx& c) {
    const auto body = c.body();
    // Delivery of the token is out of band; the response never reveals it
    // nor whether the username exists.
    try {
        const auto username = field<std::string>(body, "username");
        c.platform.notify_password_reset(username, c.platform.directory().request_password_reset(username));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::not_found) throw;
    }
    return Reply::of({{"status", "requested"}}, 202);
}

Reply password_reset_confirm(Ctx& c) {
    const auto body = c.body();
    c.platform.directory().reset_password(field<std::string>(body, "reset_token"),
                                          field<std::string>(body, "new_password"));
    return Reply::empty();
}

Reply me(Ctx& c) { return Reply::of(user_json(c.actor())); }

Reply create_course(Ctx& c) {
    const auto body = c.body();
    const auto visibility = courses::parse_visibility(opt_field<std::string>(body, "visibility").value_or("public"));
    return Reply::of(course_json(c.platform.directory().create_course(c.actor(), field<std::string>(body, "title"),
                                                                      visibility)),
                     201);
}

Reply list_courses(Ctx& c) {
    json out = json::array();
    for (const auto& course : c.platform.directory().list_accessible(c.actor())) out.push_back(course_json(course));
    return Reply::of(out);
}

Reply get_course(Ctx& c) {
    const auto course = c.platform.directory().require_reader(c.actor(), c.id_param(1));
    auto j = course_json(course);
    const auto index = c.platform.registry().find(course.slug);
    j["manifest_version"] = index ? json(index->manifest_version) : json(nullptr);
    j["n_chunks"] = index ? index->n_chunks() : 0;
    return Reply::of(j);
}

Reply list_grants(Ctx& c) {
    json out = json::array();
    for (const auto& g : c.platform.directory().list_grants(c.actor(), c.id_param(1))) {
        out.push_back({{"course_id", g.course_id}, {"user_id", g.user_id}, {"granted_by", g.granted_by},
                       {"granted_at", text::iso8601_utc(g.granted_at_ms)}});
    }
    return Reply::of(out);
}

Reply add_grant(Ctx& c) {
    const auto body = c.body();
    const auto course_id = c.id_param(1);
    const auto user_id = field<std::int64_t>(body, "user_id");
    c.platform.directory().grant_access(c.actor(), course_id, user_id);
    return Reply::of({{"course_id", course_id}, {"user_id", user_id}}, 201);
}

Reply delete_grant(Ctx& c) {
    c.platform.directory().revoke_access(c.actor(), c.id_param(1), c.id_param(2));
    return Reply::empty();
}

Reply upload_document(Ctx& c) {
    const auto course = c.platform.directory().require_owner(c.actor(), c.id_param(1));
    if (!c.req.has_file("file")) fail(ErrorCode::invalid_argument, "multipart field 'file' is required");
    const auto file = c.req.get_file_value("file");
    std::string declared;
    if (c.req.has_file("declared_format")) {
        declared = text::trim(c.req.get_file_value("declared_format").content);
    } else if (auto dot = file.filename.rfind('.'); dot != std::string::npos) {
        declared = text::to_lower_ascii(file.filename.substr(dot + 1));
    }
    const auto format = ingest::parse_format(declared);
    const auto [job_id, doc_id] = c.platform.submit_upload(course, file.filename, file.content, format);
    return Reply::of({{"job_id", job_id}, {"doc_id", doc_id}, {"status", "queued"}}, 202);
}

Reply list_documents(Ctx& c) {
    const auto course = c.platform.directory().require_reader(c.actor(), c.id_param(1));
    json out = json::array();
    for (const auto& d : c.platform.pipeline().documents(course.course_id)) {
        out.push_back({{"doc_id", d.doc_id}, {"title", d.title}, {"origin", ingest::origin_name(d.origin)},
                       {"origin_ref", d.origin_ref}, {"indexed", d.body_dropped},
                       {"ingested_at", text::iso8601_utc(d.ingested_at_ms)}});
    }
    return Reply::of(out);
}

Reply add_youtube(Ctx& c) {
    const auto course = c.platform.directory().require_owner(c.actor(), c.id_param(1));
    const auto body = c.body();
    const auto langs = opt_field<std::vector<std::string>>(body, "preferred_langs").value_or(std::vector<std::string>{});
    const auto [job_id, doc_id] = c.platform.submit_transcript(course, field<std::string>(body, "url"), langs);
    return Reply::of({{"job_id", job_id}, {"doc_id", doc_id}, {"status", "queued"}}, 202);
}

Reply get_job(Ctx& c) {
    const auto job = c.platform.jobs().find(c.param(1));
    if (!job) fail(ErrorCode::not_found, "no such job");
    c.platform.directory().require_owner(c.actor(), job->course_id);
    return Reply::of(job_json(*job));
}

Reply list_chunks(Ctx& c) {
    const auto course = c.platform.directory().require_reader(c.actor(), c.id_param(1));
    const auto index = c.platform.registry().get(course.slug);
    json out = json::array();
    for (const auto& ch : index->chunks) {
        out.push_back({{"chunk_id", ch.chunk_id}, {"doc_id", ch.doc_id}, {"ordinal", ch.ordinal},
                       {"word_count", ch.word_count}, {"text", ch.text}});
    }
    return Reply::of({{"manifest_version", index->manifest_version}, {"chunks", std::move(out)}});
}

Reply search(Ctx& c) {
    const auto course = c.platform.directory().require_reader(c.actor(), c.id_param(1));
    const auto q = c.query("q").value_or("");
    if (text::trim(q).empty()) fail(ErrorCode::empty_query, "query parameter 'q' is required");
    const auto index = c.platform.registry().get(course.slug);
    auto options = c.platform.chat().options().retrieval;
    if (auto it = c.platform.config().course_bm25.find(course.slug); it != c.platform.config().course_bm25.end()) {
        options.bm25 = it->second;
    }
    if (auto k = c.query_int("k")) {
        if (*k <= 0) fail(ErrorCode::invalid_argument, "k must be at least 1");
        options.k = static_cast<std::size_t>(*k);
    }
    if (auto alpha = c.query_double("alpha")) options.alpha = *alpha;
    const auto query = make_query(q, *index, c.platform.embedder(), nullptr, c.platform.chat().options().max_keywords);
    json results = json::array();
    for (const auto& r : hybrid_retrieve(query, *index, options)) {
        results.push_back({{"rank", r.rank}, {"chunk_id", r.chunk_id}, {"bm25", r.bm25_score},
                           {"cosine", r.cosine_score}, {"fused", r.fused_score},
                           {"text", index->chunks[r.chunk_id].text}});
    }
    return Reply::of({{"keywords", query.keywords}, {"results", std::move(results)}});
}

Reply chat_answer(Ctx& c) {
    const auto body = c.body();
    const auto mode = parse_mode(opt_field<std::string>(body, "mode").value_or("restricted"));
    std::optional<std::size_t> k;
    if (auto kv = opt_field<std::int64_t>(body, "k")) {
        if (*kv <= 0) fail(ErrorCode::invalid_argument, "k must be at least 1");
        k = static_cast<std::size_t>(*kv);
    }
    const auto turn = c.platform.chat().answer(c.actor(), c.id_param(1), field<std::string>(body, "question"), mode, k);
    return Reply::of({{"turn_id", turn.turn_id},
                      {"answer", turn.answer},
                      {"context_chunk_ids", turn.context_chunk_ids},
                      {"mode", mode_name(turn.mode)},
                      {"model_id", turn.model_id}});
}

Reply list_turns(Ctx& c) {
    chat::TurnFilter filter;
    filter.user_id = c.query_int("user_id");
    filter.from_ms = c.query_int("from");
    filter.to_ms = c.query_int("to");
    json out = json::array();
    for (const auto& t : c.platform.chat().list_turns(c.actor(), c.id_param(1), filter)) out.push_back(turn_json(t));
    return Reply::of(out);
}

Reply weak_modules(Ctx& c) {
    const auto course = c.platform.directory().require_owner(c.actor(), c.id_param(1));
    const double threshold = c.query_double("threshold").value_or(0.5);
    const auto report = c.platform.analytics().weak_module_report(course.course_id, threshold);
    if (c.query("format").value_or("json") == "csv") return {200, analytics::weak_modules_csv(report), "text/csv"};
    return Reply::of({{"course_id", course.course_id}, {"threshold", threshold}, {"modules", report}});
}

Reply time_spent(Ctx& c) {
    const auto course = c.platform.directory().require_owner(c.actor(), c.id_param(1));
    const double avg = c.platform.analytics().avg_time_spent(course.course_id);
    if (c.query("format").value_or("json") == "csv") {
        return {200, analytics::time_spent_csv(course.course_id, avg), "text/csv"};
    }
    return Reply::of({{"course_id", course.course_id}, {"avg_seconds", avg}});
}

Reply create_quiz(Ctx& c) {
    const auto course = c.platform.directory().require_owner(c.actor(), c.id_param(1));
    const auto body = c.body();
    const auto label = field<std::string>(body, "module_label");
    const auto index = c.platform.registry().get(course.slug);
    analytics::Quiz quiz;
    if (body.contains("questions")) {
        quiz = c.platform.analytics().store_quiz(course.course_id, label,
                                                 analytics::parse_quiz_payload(body.dump()), "manual");
    } else {
        const auto n = opt_field<std::int64_t>(body, "n_questions").value_or(5);
        if (n <= 0) fail(ErrorCode::invalid_argument, "n_questions must be at least 1");
        const bool use_llm = opt_field<bool>(body, "use_llm").value_or(true);
        quiz = c.platform.analytics().generate_quiz(course.course_id, *index, label, static_cast<std::size_t>(n),
                                                    use_llm ? c.platform.llm() : nullptr);
    }
    return Reply::of(quiz_json(quiz, true), 201);
}

bool owns(Ctx& c, CourseId course_id) {
    const auto course = c.platform.directory().find_course(course_id);
    return course && course->owner_id == c.actor().user_id;
}

Reply list_quizzes(Ctx& c) {
    const auto course = c.platform.directory().require_reader(c.actor(), c.id_param(1));
    const bool with_answers = course.owner_id == c.actor().user_id;
    json out = json::array();
    for (const auto& q : c.platform.analytics().list_quizzes(course.course_id)) out.push_back(quiz_json(q, with_answers));
    return Reply::of(out);
}

Reply get_quiz(Ctx& c) {
    const auto quiz = c.platform.analytics().get_quiz(c.id_param(1));
    c.platform.directory().require_reader(c.actor(), quiz.course_id);
    return Reply::of(quiz_json(quiz, owns(c, quiz.course_id)));
}

Reply submit_attempt(Ctx& c) {
    const auto quiz = c.platform.analytics().get_quiz(c.id_param(1));
    c.platform.directory().require_reader(c.actor(), quiz.course_id);
    const auto answers = field<std::vector<int>>(c.body(), "answers");
    const auto a = c.platform.analytics().record_attempt(c.actor().user_id, quiz.quiz_id, answers);
    return Reply::of({{"attempt_id", a.attempt_id}, {"quiz_id", a.quiz_id}, {"correct", a.correct},
                      {"total", a.total}, {"score", a.score()}},
                     201);
}

Reply start_session(Ctx& c) {
    const auto course = c.platform.directory().require_reader(c.actor(), c.id_param(1));
    return Reply::of(session_json(c.platform.analytics().start_session(c.actor().user_id, course.course_id)), 201);
}

Reply end_session(Ctx& c) {
    return Reply::of(session_json(c.platform.analytics().end_session(c.actor().user_id, c.id_param(1))));
}

struct Route {
    RouteSpec spec;
    Handler handler;
};

const std::vector<Route>& route_table() {
    static const std::vector<Route> table = {
        {{"POST", "/auth/register", Access::open}, auth_register},
        {{"POST", "/auth/pay", Access::open}, auth_pay},
        {{"POST", "/auth/login", Access::open}, auth_login},
        {{"POST", "/auth/password-reset", Access::open}, password_reset},
        {{"POST", "/auth/password-reset/confirm", Access::open}, password_reset_confirm},
        {{"POST", "/auth/logout", Access::authenticated}, auth_logout},
        {{"GET", "/me", Access::authenticated}, me},
        {{"POST", "/courses", Access::authenticated}, create_course},
        {{"GET", "/courses", Access::authenticated}, list_courses},
        {{"GET", "/courses/{id}", Access::course_read}, get_course},
        {{"GET", "/courses/{id}/grants", Access::course_owner}, list_grants},
        {{"POST", "/courses/{id}/grants", Access::course_owner}, add_grant},
        {{"DELETE", "/courses/{id}/grants/{user_id}", Access::course_owner}, delete_grant},
        {{"POST", "/courses/{id}/documents", Access::course_owner}, upload_document},
        {{"GET", "/courses/{id}/documents", Access::course_read}, list_documents},
        {{"POST", "/courses/{id}/youtube", Access::course_owner}, add_youtube},
        {{"GET", "/jobs/{id}", Access::job_owner}, get_job},
        {{"GET", "/courses/{id}/chunks", Access::course_read}, list_chunks},
        {{"GET", "/courses/{id}/search", Access::course_read}, search},
        {{"POST", "/courses/{id}/chat", Access::course_read}, chat_answer},
        {{"GET", "/courses/{id}/turns", Access::course_read}, list_turns},
        {{"GET", "/courses/{id}/analytics/weak-modules", Access::course_owner}, weak_modules},
        {{"GET", "/courses/{id}/analytics/time", Access::course_owner}, time_spent},
        {{"POST", "/courses/{id}/quizzes", Access::course_owner}, create_quiz},
        {{"GET", "/courses/{id}/quizzes", Access::course_read}, list_quizzes},
        {{"GET", "/quizzes/{id}", Access::quiz_read}, get_quiz},
        {{"POST", "/quizzes/{id}/attempts", Access::quiz_read}, submit_attempt},
        {{"POST", "/courses/{id}/sessions", Access::course_read}, start_session},
        {{"POST", "/sessions/{id}/end", Access::session_owner}, end_session},
    };
    return table;
}

std::string to_regex(const std::string& pattern) {
    static const std::regex slot(R"(\{[a-z_]+\})");
    return std::regex_replace(pattern, slot, "([^/]+)");
}

void write_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
    res.status = status;
    res.set_content(error_json(code, message).dump(), "application/json");
}

}  // namespace

const std::vector<RouteSpec>& routes() {
    static const std::vector<RouteSpec> specs = [] {
        std::vector<RouteSpec> out;
        for (const auto& r : route_table()) out.push_back(r.spec);
        return out;
    }();
    return specs;
}

struct Server::Impl {
    Platform& platform;
    ServerOptions options;
    httplib::Server http;

    Impl(Platform& p, ServerOptions o) : platform(p), options(o) {
        http.set_payload_max_length(options.max_upload_bytes);
        for (const auto& route : route_table()) register_route(route);

        http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return;
            switch (res.status) {
                case 404: write_error(res, 404, "not_found", "no such route"); break;
                case 413: write_error(res, 413, "invalid_argument", "payload too large"); break;
                default: write_error(res, res.status, "invalid_argument", "request rejected"); break;
            }
        });
        http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            write_error(res, 500, "internal", "internal error");
        });
        if (options.access_log) {
            http.set_logger([](const httplib::Request& req, const httplib::Response& res) {
                std::cerr << req.method << ' ' << req.path << ' ' << res.status << '\n';
            });
        }
    }

    void register_route(const Route& route) {
        const auto pattern = to_regex(route.spec.pattern);
        auto wrapped = [this, route](const httplib::Request& req, httplib::Response& res) {
            Ctx ctx{req, platform, std::nullopt};
            try {
                if (route.spec.access != Access::open) {
                    const auto header = req.get_header_value("Authorization");
                    if (header.rfind("Bearer ", 0) != 0 || header.size() <= 7) {
                        fail(ErrorCode::unauthorized, "missing bearer token");
                    }
                    ctx.user = platform.directory().authenticate(header.substr(7));
                }
                const auto reply = route.handler(ctx);
                res.status = reply.status;
                if (reply.status != 204) res.set_content(reply.body, reply.content_type);
            } catch (const Error& e) {
                write_error(res, http_status(e.code()), code_name(e.code()), e.what());
            } catch (const std::exception&) {
                write_error(res, 500, "internal", "internal error");
            }
        };
        if (route.spec.method == "GET") {
            http.Get(pattern, wrapped);
        } else if (route.spec.method == "POST") {
            http.Post(pattern, wrapped);
        } else if (route.spec.method == "DELETE") {
            http.Delete(pattern, wrapped);
        } else if (route.spec.method == "PUT") {
            http.Put(pattern, wrapped);
        }
    }
};

Server::Server(Platform& platform, ServerOptions options) : impl_(std::make_unique<Impl>(platform, options)) {}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->http.bind_to_any_port(host);
        if (bound < 0) fail(ErrorCode::internal, "cannot bind " + host);
        return bound;
    }
    if (!impl_->http.bind_to_port(host, port)) {
        fail(ErrorCode::internal, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void Server::run() { impl_->http.listen_after_bind(); }

void Server::start() {
    thread_ = std::thread([this] { run(); });
    impl_->http.wait_until_ready();
}

void Server::stop() {
    impl_->http.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace coursekb::api
