// SPDX-License-Identifier: Apache-2.0
#include "coursekb/config.hpp"

#include "coursekb/error.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace coursekb {

using nlohmann::json;

namespace {

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

FusionMethod parse_fusion(const std::string& s) {
    if (s == "weighted" || s == "minmax") return FusionMethod::weighted_minmax;
    if (s == "rrf") return FusionMethod::reciprocal_rank;
    fail(ErrorCode::invalid_argument, "fusion must be 'weighted' or 'rrf'");
}

}  // namespace

Config config_from_json(const std::string& json_text, Config c) {
    try {
        const auto j = json::parse(json_text);
        take(j, "listen_addr", c.listen_addr);
        take(j, "db_path", c.db_path);
        take(j, "object_store_root", c.object_store_root);
        take(j, "object_store_url", c.object_store_url);
        take(j, "object_store_token", c.object_store_token);
        take(j, "llm_endpoint", c.llm_endpoint);
        take(j, "llm_api_key", c.llm_api_key);
        take(j, "llm_model", c.llm_model);
        take(j, "llm_keywords", c.llm_keywords);
        take(j, "embed_provider", c.embed_provider);
        take(j, "embed_endpoint", c.embed_endpoint);
        take(j, "embed_model", c.embed_model);
        take(j, "embed_dims", c.embed_dims);
        take(j, "transcript_fixtures", c.transcript_fixtures);
        take(j, "transcript_endpoint", c.transcript_endpoint);
        take(j, "transcript_langs", c.transcript_langs);
        take(j, "max_chunk_words", c.max_chunk_words);
        take(j, "overlap_words", c.overlap_words);
        take(j, "job_workers", c.job_workers);
        take(j, "password_hash_cost", c.password_hash_cost);
        take(j, "k", c.retrieval.k);
        take(j, "alpha", c.retrieval.alpha);
        take(j, "min_cosine", c.retrieval.min_cosine);
        take(j, "rrf_k", c.retrieval.rrf_k);
        take(j, "bm25_k1", c.retrieval.bm25.k1);
        take(j, "bm25_b", c.retrieval.bm25.b);
        if (j.contains("fusion")) c.retrieval.fusion = parse_fusion(j.at("fusion").get<std::string>());
        if (j.contains("course_bm25")) {
            for (const auto& [slug, params] : j.at("course_bm25").items()) {
                Bm25Params p = c.retrieval.bm25;
                take(params, "k1", p.k1);
                take(params, "b", p.b);
                c.course_bm25[slug] = p;
            }
        }
    } catch (const json::exception& ex) {
        fail(ErrorCode::invalid_argument, std::string("malformed config: ") + ex.what());
    }
    return c;
}

Config apply_environment(Config c) {
    if (auto v = env("LISTEN_ADDR")) c.listen_addr = *v;
    if (auto v = env("DB_PATH")) c.db_path = *v;
    if (auto v = env("DB_URL")) c.db_path = *v;
    if (auto v = env("OBJECT_STORE_ROOT")) c.object_store_root = *v;
    if (auto v = env("OBJECT_STORE_URL")) c.object_store_url = *v;
    if (auto v = env("OBJECT_STORE_TOKEN")) c.object_store_token = *v;
    if (auto v = env("LLM_ENDPOINT")) c.llm_endpoint = *v;
    if (auto v = env("LLM_API_KEY")) c.llm_api_key = *v;
    if (auto v = env("LLM_MODEL")) c.llm_model = *v;
    if (auto v = env("EMBED_PROVIDER")) c.embed_provider = *v;
    if (auto v = env("EMBED_ENDPOINT")) c.embed_endpoint = *v;
    if (auto v = env("EMBED_MODEL")) c.embed_model = *v;
    if (auto v = env("EMBED_DIMS")) c.embed_dims = std::stoul(*v);
    if (auto v = env("TRANSCRIPT_FIXTURES")) c.transcript_fixtures = *v;
    if (auto v = env("TRANSCRIPT_ENDPOINT")) c.transcript_endpoint = *v;
    if (c.embed_provider != "local" && c.embed_provider != "remote") {
        fail(ErrorCode::invalid_argument, "EMBED_PROVIDER must be 'local' or 'remote'");
    }
    return c;
}

Config load_config(const std::optional<std::string>& path) {
    Config c;
    if (path) {
        std::ifstream in(*path);
        if (!in) fail(ErrorCode::invalid_argument, "cannot read config file " + *path);
        std::ostringstream buf;
        buf << in.rdbuf();
        c = config_from_json(buf.str(), c);
    }
    return apply_environment(std::move(c));
}

}  // namespace coursekb
