// SPDX-License-Identifier: Apache-2.0
//
// Admin driver. Operates directly on the configured stores, without auth.
// Data goes to stdout (CSV or JSON), diagnostics to stderr.

#include "coursekb/api.hpp"
#include "coursekb/error.hpp"
#include "coursekb/prompts.hpp"
#include "coursekb/retrieve.hpp"
#include "coursekb/rouge.hpp"
#include "coursekb/service.hpp"
#include "coursekb/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace coursekb;
using nlohmann::json;

namespace {

constexpr const char* kAdminUser = "cli-admin";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::not_found, "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

courses::UserAccount admin_account(Platform& p) {
    auto& dir = p.directory();
    auto stmt = p.db().prepare("SELECT user_id FROM users WHERE username = ?");
    stmt.bind(1, kAdminUser);
    if (stmt.step()) return *dir.find_user(stmt.column_int64(0));
    // Never logs in: its password is random and discarded.
    const auto id = dir.register_user(kAdminUser, "admin@localhost", text::random_hex(24), courses::Role::instructor,
                                      courses::Plan::instructor_basic);
    return *dir.find_user(id);
}

std::optional<courses::Course> find_course(Platform& p, const std::string& ref) {
    if (!ref.empty() && ref.find_first_not_of("0123456789") == std::string::npos) {
        if (auto c = p.directory().find_course(std::stoll(ref))) return c;
    }
    return p.directory().find_course_by_slug(text::slug(ref));
}

courses::Course require_course(Platform& p, const std::string& ref) {
    auto c = find_course(p, ref);
    if (!c) fail(ErrorCode::course_not_found, "no course '" + ref + "'");
    return *c;
}

bool looks_like_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

// ---- subcommands ---------------------------------------------------------------

int cmd_serve(Platform& p) {
    api::ServerOptions options;
    options.access_log = true;
    api::Server server(p, options);
    const auto [host, port] = api::parse_listen_addr(p.config().listen_addr);
    const int bound = server.bind(host, port);
    std::cerr << "listening on " << host << ':' << bound << '\n';
    server.run();
    return 0;
}

struct IngestArgs {
    std::string course;
    std::string source;
    std::string format;
    std::string title;
    std::vector<std::string> langs;
    bool private_course = false;
};

int cmd_ingest(Platform& p, const IngestArgs& a) {
    auto course = find_course(p, a.course);
    if (!course) {
        const auto admin = admin_account(p);
        course = p.directory().create_course(admin, a.title.empty() ? a.course : a.title,
                                             a.private_course ? courses::Visibility::private_
                                                              : courses::Visibility::public_);
        std::cerr << "created course " << course->slug << " (id " << course->course_id << ")\n";
    }

    ingest::SourceDocument doc;
    if (looks_like_url(a.source)) {
        doc = p.pipeline().stage_transcript(*course, a.source, a.langs.empty() ? p.config().transcript_langs : a.langs,
                                            p.transcripts());
    } else {
        std::string format = a.format;
        if (format.empty()) {
            const auto dot = a.source.rfind('.');
            format = dot == std::string::npos ? "" : text::to_lower_ascii(a.source.substr(dot + 1));
        }
        const auto filename = std::filesystem::path(a.source).filename().string();
        doc = p.pipeline().stage_upload(*course, filename, read_file(a.source), ingest::parse_format(format));
    }
    const auto result = p.pipeline().build(*course, doc.doc_id);
    std::cerr << "indexed " << result.new_chunks << " chunks from " << doc.doc_id << '\n';
    std::cout << result.manifest_version << '\n';
    return 0;
}

struct QueryArgs {
    std::string course;
    std::string question;
    std::optional<double> alpha;
    std::optional<std::size_t> k;
    std::string mode = "restricted";
};

int cmd_query(Platform& p, const QueryArgs& a) {
    const auto course = require_course(p, a.course);
    const auto mode = parse_mode(a.mode);
    const auto index = p.registry().get(course.slug);
    auto options = p.chat().options().retrieval;
    if (auto it = p.config().course_bm25.find(course.slug); it != p.config().course_bm25.end()) options.bm25 = it->second;
    if (a.alpha) options.alpha = *a.alpha;
    if (a.k) options.k = *a.k;
    if (options.k == 0) fail(ErrorCode::invalid_argument, "--k must be at least 1");

    const auto query = make_query(a.question, *index, p.embedder(), nullptr, p.chat().options().max_keywords);
    const auto results = hybrid_retrieve(query, *index, options);

    json out;
    out["course"] = course.slug;
    out["manifest_version"] = index->manifest_version;
    out["keywords"] = query.keywords;
    out["results"] = json::array();
    std::vector<Chunk> context;
    for (const auto& r : results) {
        const auto& chunk = index->chunks[r.chunk_id];
        context.push_back(chunk);
        out["results"].push_back({{"rank", r.rank}, {"chunk_id", r.chunk_id}, {"doc_id", chunk.doc_id},
                                  {"bm25", r.bm25_score}, {"cosine", r.cosine_score}, {"fused", r.fused_score},
                                  {"text", chunk.text}});
    }

    if (mode == PromptMode::restricted && results.empty()) {
        out["answer"] = std::string(kRefusalAnswer);
    } else if (p.llm() != nullptr && !context.empty()) {
        ChatRequest req;
        req.model = p.llm()->model_id();
        req.temperature = p.chat().options().temperature;
        req.messages.push_back({"user", render_prompt(mode, context, a.question)});
        out["answer"] = p.llm()->chat(req).content;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

// JSONL rows keyed by turn_id; text comes from "answer" or "reference".
std::map<std::string, std::string> read_texts(const std::string& path) {
    std::map<std::string, std::string> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            const auto id = j.at("turn_id").is_string() ? j.at("turn_id").get<std::string>()
                                                        : std::to_string(j.at("turn_id").get<std::int64_t>());
            const auto key = j.contains("answer") ? "answer" : "reference";
            out[id] = j.at(key).get<std::string>();
        } catch (const json::exception&) {
            fail(ErrorCode::invalid_argument, path + ":" + std::to_string(line_no) +
                                                  ": expected {turn_id, answer|reference}");
        }
    }
    return out;
}

int cmd_eval_rouge(const std::string& turns_path, const std::string& refs_path, const std::string& metric) {
    if (metric != "rouge1" && metric != "rouge2" && metric != "rougeL") {
        fail(ErrorCode::invalid_argument, "--metric must be rouge1, rouge2 or rougeL");
    }
    const auto turns = read_texts(turns_path);
    const auto refs = read_texts(refs_path);
    std::cout << "turn_id,precision,recall,f1\n";
    double sp = 0, sr = 0, sf = 0;
    std::size_t n = 0;
    for (const auto& [id, candidate] : turns) {
        auto ref = refs.find(id);
        if (ref == refs.end()) {
            std::cerr << "no reference for turn " << id << ", skipped\n";
            continue;
        }
        const auto s = metric == "rouge1"   ? rouge::rouge_n(candidate, ref->second, 1)
                       : metric == "rouge2" ? rouge::rouge_n(candidate, ref->second, 2)
                                            : rouge::rouge_l(candidate, ref->second);
        std::cout << csv_cell(id) << ',' << fmt(s.precision) << ',' << fmt(s.recall) << ',' << fmt(s.f1) << '\n';
        sp += s.precision;
        sr += s.recall;
        sf += s.f1;
        ++n;
    }
    if (n == 0) fail(ErrorCode::empty_input, "no turn has a matching reference");
    std::cout << "mean," << fmt(sp / n) << ',' << fmt(sr / n) << ',' << fmt(sf / n) << '\n';
    return 0;
}

int cmd_report(Platform& p, const std::string& course_ref, const std::string& kind, double threshold) {
    const auto course = require_course(p, course_ref);
    if (kind == "weak-modules") {
        std::cout << analytics::weak_modules_csv(p.analytics().weak_module_report(course.course_id, threshold));
    } else if (kind == "time") {
        std::cout << analytics::time_spent_csv(course.course_id, p.analytics().avg_time_spent(course.course_id));
    } else {
        fail(ErrorCode::invalid_argument, "report kind must be weak-modules or time");
    }
    return 0;
}

int cmd_turns(Platform& p, const std::string& course_ref) {
    const auto course = require_course(p, course_ref);
    const auto owner = p.directory().find_user(course.owner_id);
    for (const auto& t : p.chat().list_turns(*owner, course.course_id)) {
        std::cout << json{{"turn_id", std::to_string(t.turn_id)}, {"question", t.question}, {"answer", t.answer},
                          {"mode", mode_name(t.mode)}}
                         .dump()
                  << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coursekb: course knowledge base administration"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (environment variables override it)");

    auto* serve = app.add_subcommand("serve", "run the HTTP API");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "ingest a file or YouTube URL into a course index");
    ingest->add_option("--course", ingest_args.course, "course slug, title or id")->required();
    ingest->add_option("source", ingest_args.source, "file path or video URL")->required();
    ingest->add_option("--format", ingest_args.format, "txt | md | csv (default: file extension)");
    ingest->add_option("--title", ingest_args.title, "title when the course is created");
    ingest->add_option("--lang", ingest_args.langs, "preferred transcript languages, in order");
    ingest->add_flag("--private", ingest_args.private_course, "create the course as private");

    QueryArgs query_args;
    auto* query = app.add_subcommand("query", "rank chunks for a question and answer it if an LLM is configured");
    query->add_option("--course", query_args.course)->required();
    query->add_option("question", query_args.question)->required();
    query->add_option("--alpha", query_args.alpha, "lexical weight in [0,1]");
    query->add_option("--k", query_args.k, "number of chunks");
    query->add_option("--mode", query_args.mode)->check(CLI::IsMember({"restricted", "relaxed", "medical"}));

    std::string turns_path, refs_path, metric = "rougeL";
    auto* eval = app.add_subcommand("eval-rouge", "score answers against references; CSV out");
    eval->add_option("turns_file", turns_path, "JSONL {turn_id, answer}")->required();
    eval->add_option("refs_file", refs_path, "JSONL {turn_id, reference}")->required();
    eval->add_option("--metric", metric)->check(CLI::IsMember({"rouge1", "rouge2", "rougeL"}));

    std::string report_course, report_kind = "weak-modules";
    double threshold = 0.5;
    auto* report = app.add_subcommand("report", "analytics report as CSV");
    report->add_option("--course", report_course)->required();
    report->add_option("kind", report_kind, "weak-modules | time");
    report->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));

    std::string turns_course;
    auto* turns = app.add_subcommand("turns", "export a course's chat turns as JSONL");
    turns->add_option("--course", turns_course)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*eval) return cmd_eval_rouge(turns_path, refs_path, metric);
        Platform platform(load_config(config_path.empty() ? std::nullopt : std::optional<std::string>(config_path)));
        if (*serve) return cmd_serve(platform);
        if (*ingest) return cmd_ingest(platform, ingest_args);
        if (*query) return cmd_query(platform, query_args);
        if (*report) return cmd_report(platform, report_course, report_kind, threshold);
        if (*turns) return cmd_turns(platform, turns_course);
    } catch (const Error& e) {
        std::cerr << json{{"code", code_name(e.code())}, {"message", e.what()}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"code", "internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 1;
}
