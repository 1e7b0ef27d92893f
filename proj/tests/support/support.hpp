// SPDX-License-Identifier: Apache-2.0
//
// Shared test scaffolding: scripted collaborators, a platform factory over
// in-memory stores, loopback HTTP helpers and random-input generators.
#pragma once

#include "coursekb/api.hpp"
#include "coursekb/error.hpp"
#include "coursekb/index.hpp"
#include "coursekb/llm.hpp"
#include "coursekb/service.hpp"

#include <httplib.h>
#include <json.hpp>
#include <sodium.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef COURSEKB_TEST_DATA
#error "COURSEKB_TEST_DATA must point at the tests/ directory"
#endif

namespace testkit {

using namespace coursekb;
using nlohmann::json;

inline std::filesystem::path data_dir() { return COURSEKB_TEST_DATA; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("missing test file " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---- scripted LLM ---------------------------------------------------------------

class ScriptedLlm : public LlmClient {
public:
    explicit ScriptedLlm(std::string reply = "Scripted answer.") : reply_(std::move(reply)) {}

    ChatResponse chat(const ChatRequest& request) override {
        ++calls;
        std::lock_guard lk(mu_);
        last_ = request;
        if (failing) fail(ErrorCode::llm_unavailable, "scripted failure");
        return {reply_};
    }
    std::string model_id() const override { return "scripted-1"; }

    void set_reply(std::string r) {
        std::lock_guard lk(mu_);
        reply_ = std::move(r);
    }
    ChatRequest last_request() {
        std::lock_guard lk(mu_);
        return last_;
    }

    std::atomic<int> calls{0};
    std::atomic<bool> failing{false};

private:
    std::mutex mu_;
    std::string reply_;
    ChatRequest last_;
};

/// Chat-completion endpoint on loopback. Replies {"content": ...} built from
/// the last user message so answers are traceable to their prompt.
class MockLlmServer {
public:
    MockLlmServer() {
        server_.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls;
            auto body = json::parse(req.body);
            last_auth_ = req.get_header_value("Authorization");
            const auto& messages = body.at("messages");
            const auto prompt = messages.back().at("content").get<std::string>();
            res.set_content(json{{"content", "Mock answer (" + std::to_string(prompt.size()) + " prompt bytes)."}}.dump(),
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockLlmServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat"; }
    std::string last_auth() const { return last_auth_; }

    std::atomic<int> calls{0};

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::string last_auth_;
};

// ---- platform ---------------------------------------------------------------------

inline Config test_config() {
    Config c;
    c.db_path = ":memory:";
    c.transcript_fixtures = (data_dir() / "fixtures" / "transcripts").string();
    c.password_hash_cost = "min";
    c.job_workers = 2;
    return c;
}

struct Harness {
    std::unique_ptr<Platform> platform;
    ScriptedLlm* llm = nullptr;  // owned by the platform
    courses::StubPaymentGateway* gateway = nullptr;
    std::shared_ptr<std::vector<std::pair<std::string, std::string>>> resets =
        std::make_shared<std::vector<std::pair<std::string, std::string>>>();

    Platform& operator*() { return *platform; }
    Platform* operator->() { return platform.get(); }
};

inline Harness make_harness(Config config = test_config(), bool with_llm = true) {
    if (sodium_init() < 0) throw std::runtime_error("sodium_init");
    Harness h;
    PlatformDeps deps;
    deps.store = std::make_unique<MemoryObjectStore>();
    if (with_llm) {
        auto llm = std::make_unique<ScriptedLlm>();
        h.llm = llm.get();
        deps.llm = std::move(llm);
    }
    auto gw = std::make_unique<courses::StubPaymentGateway>();
    h.gateway = gw.get();
    deps.gateway = std::move(gw);
    courses::DirectoryOptions dir;
    dir.pwhash_opslimit = crypto_pwhash_OPSLIMIT_MIN;
    dir.pwhash_memlimit = crypto_pwhash_MEMLIMIT_MIN;
    deps.directory = dir;
    auto resets = h.resets;
    deps.reset_notifier = [resets](const std::string& user, const std::string& token) {
        resets->emplace_back(user, token);
    };
    h.platform = std::make_unique<Platform>(std::move(config), std::move(deps));
    return h;
}

inline courses::UserAccount make_user(Platform& p, const std::string& name, courses::Role role) {
    const auto plan = role == courses::Role::instructor ? courses::Plan::instructor_basic : courses::Plan::learner_basic;
    const auto id = p.directory().register_user(name, name + "@example.org", "password-" + name, role, plan);
    p.directory().process_payment(id, plan);
    return *p.directory().find_user(id);
}

/// Indexes `body` into the course synchronously.
inline std::uint64_t index_text(Platform& p, const courses::Course& course, const std::string& body,
                                const std::string& filename = "notes.txt") {
    const auto doc = p.pipeline().stage_upload(course, filename, body, ingest::UploadFormat::txt);
    return p.pipeline().build(course, doc.doc_id).manifest_version;
}

// ---- loopback API client ------------------------------------------------------------

struct Response {
    int status = 0;
    std::string body;
    std::string content_type;
    json as_json() const { return body.empty() ? json() : json::parse(body); }
};

class ApiClient {
public:
    explicit ApiClient(int port) : client_("127.0.0.1", port) {
        client_.set_read_timeout(30, 0);
        client_.set_connection_timeout(5, 0);
    }

    void set_token(std::string t) { token_ = std::move(t); }

    Response send(const std::string& method, const std::string& path, const json& body = json(),
                  std::optional<std::string> token = std::nullopt) {
        httplib::Headers headers;
        const auto& tok = token ? *token : token_;
        if (!tok.empty()) headers.emplace("Authorization", "Bearer " + tok);
        const auto payload = body.is_null() ? std::string() : body.dump();
        httplib::Result r;
        if (method == "GET") {
            r = client_.Get(path, headers);
        } else if (method == "POST") {
            r = client_.Post(path, headers, payload, "application/json");
        } else if (method == "DELETE") {
            r = client_.Delete(path, headers, payload, "application/json");
        } else if (method == "PUT") {
            r = client_.Put(path, headers, payload, "application/json");
        }
        if (!r) throw std::runtime_error("transport failure on " + method + " " + path);
        return {r->status, r->body, r->get_header_value("Content-Type")};
    }

    Response upload(const std::string& path, const std::string& filename, const std::string& content,
                    const std::string& declared_format) {
        httplib::Headers headers{{"Authorization", "Bearer " + token_}};
        httplib::MultipartFormDataItems items{
            {"file", content, filename, "application/octet-stream"},
            {"declared_format", declared_format, "", ""},
        };
        auto r = client_.Post(path, headers, items);
        if (!r) throw std::runtime_error("transport failure on upload");
        return {r->status, r->body, r->get_header_value("Content-Type")};
    }

    /// Polls GET /jobs/{id} until done/failed.
    json wait_job(const std::string& job_id, std::chrono::seconds limit = std::chrono::seconds(20)) {
        const auto deadline = std::chrono::steady_clock::now() + limit;
        for (;;) {
            auto r = send("GET", "/jobs/" + job_id);
            auto j = r.as_json();
            if (r.status != 200) return j;
            const auto status = j.at("status").get<std::string>();
            if (status == "done" || status == "failed") return j;
            if (std::chrono::steady_clock::now() > deadline) return j;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
    }

private:
    httplib::Client client_;
    std::string token_;
};

/// Runs an api::Server for a platform on an ephemeral loopback port.
class LiveServer {
public:
    explicit LiveServer(Platform& p) : server_(p) {
        port_ = server_.bind("127.0.0.1", 0);
        server_.start();
    }
    int port() const { return port_; }
    ApiClient client() const { return ApiClient(port_); }

private:
    api::Server server_;
    int port_ = 0;
};

// ---- random inputs ------------------------------------------------------------------

/// Corpus whose chunk text is a known term sequence: vocabulary terms "w<i>"
/// plus a sprinkling of stopwords that must not count toward lengths.
struct RandomCorpus {
    std::vector<std::vector<std::string>> terms;  // non-stopword terms per chunk, in order
    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> embeddings;
    CourseIndex index;
};

inline RandomCorpus random_corpus(std::mt19937_64& rng, std::size_t max_chunks = 50, std::size_t vocab = 200,
                                  std::size_t dims = 16) {
    static const char* fillers[] = {"the", "and", "of", "to", "is"};
    RandomCorpus rc;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_chunks)(rng);
    const std::size_t v = std::uniform_int_distribution<std::size_t>(1, vocab)(rng);
    std::uniform_int_distribution<std::size_t> term(0, v - 1);
    std::uniform_int_distribution<int> len(1, 40);
    std::uniform_int_distribution<int> coin(0, 5);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<std::string> words;
        std::string text;
        const int l = len(rng);
        for (int i = 0; i < l; ++i) {
            words.push_back("w" + std::to_string(term(rng)));
            if (!text.empty()) text.push_back(' ');
            text += words.back();
            if (coin(rng) == 0) text += std::string(" ") + fillers[coin(rng) % 5];
        }
        rc.terms.push_back(words);
        Chunk ch;
        ch.chunk_id = static_cast<ChunkId>(c);
        ch.doc_id = "doc-" + std::to_string(c % 3);
        ch.ordinal = static_cast<std::uint32_t>(c / 3);
        ch.text = text;
        ch.word_count = static_cast<std::uint32_t>(l);
        rc.chunks.push_back(ch);
        EmbeddingVector e;
        for (std::size_t d = 0; d < dims; ++d) e.values.push_back(gauss(rng));
        rc.embeddings.push_back(std::move(e));
    }
    rc.index = build_index("course-rand", rc.chunks, rc.embeddings);
    return rc;
}

}  // namespace testkit
