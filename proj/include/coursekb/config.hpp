// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/retrieve.hpp"

#include <map>
#include <optional>
#include <string>

namespace coursekb {

/// Runtime configuration. Loaded from an optional JSON file, then overridden
/// by environment variables of the same meaning (LISTEN_ADDR, DB_PATH, ...).
struct Config {
    std::string listen_addr = "127.0.0.1:8080";
    std::string db_path = "data/coursekb.db";
    std::string object_store_root = "data/store";
    std::string object_store_url;  // http object service; overrides the root when set
    std::string object_store_token;

    std::string llm_endpoint;
    std::string llm_api_key;
    std::string llm_model = "llama3";
    bool llm_keywords = false;

    std::string embed_provider = "local";  // local | remote
    std::string embed_endpoint;
    std::string embed_model = "embed";
    std::size_t embed_dims = 384;

    std::string transcript_fixtures = "data/transcripts";
    std::string transcript_endpoint;
    std::vector<std::string> transcript_langs = {"en"};

    std::size_t max_chunk_words = 512;
    std::size_t overlap_words = 64;
    RetrievalOptions retrieval{};
    /// Per-course (by slug) BM25 parameters.
    std::map<std::string, Bm25Params> course_bm25;

    std::size_t job_workers = 2;
    std::string password_hash_cost = "interactive";  // interactive | min
};

/// Throws invalid_argument for unreadable or malformed files.
Config load_config(const std::optional<std::string>& path);
/// Applies environment overrides on top of `base`.
Config apply_environment(Config base);
Config config_from_json(const std::string& json_text, Config base = {});

}  // namespace coursekb
