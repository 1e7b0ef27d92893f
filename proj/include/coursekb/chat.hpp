// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/courses.hpp"
#include "coursekb/db.hpp"
#include "coursekb/embedding.hpp"
#include "coursekb/llm.hpp"
#include "coursekb/prompts.hpp"
#include "coursekb/registry.hpp"
#include "coursekb/retrieve.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coursekb::chat {

/// One recorded exchange; the substrate for analytics and offline ROUGE runs.
struct ChatTurn {
    std::int64_t turn_id = 0;
    courses::UserId user_id = 0;
    courses::CourseId course_id = 0;
    PromptMode mode = PromptMode::restricted;
    std::string question;
    std::vector<ChunkId> context_chunk_ids;
    std::string rendered_prompt;
    std::string answer;
    std::string model_id;
    std::optional<std::string> error;  // error code when the LLM call failed
    std::int64_t created_at_ms = 0;
    std::int64_t latency_ms = 0;
};

struct ChatOptions {
    RetrievalOptions retrieval{};
    double temperature = 0.2;
    /// Answer "I don't know." without calling the LLM when a restricted-mode
    /// question retrieves nothing.
    bool refusal_guard = true;
    std::size_t max_keywords = 8;
    /// BM25 parameters by course slug, overriding retrieval.bm25.
    std::map<std::string, Bm25Params> course_bm25;
};

struct TurnFilter {
    std::optional<courses::UserId> user_id;
    std::optional<std::int64_t> from_ms;
    std::optional<std::int64_t> to_ms;
};

class ChatService {
public:
    /// `llm` may be null (answers then fail with llm_unavailable after the
    /// turn is recorded). `keyword_llm`, when set, proposes query keywords.
    ChatService(Database& db, courses::CourseDirectory& directory, IndexRegistry& registry,
                EmbeddingProvider& embedder, LlmClient* llm, ChatOptions options = {},
                LlmClient* keyword_llm = nullptr);

    ChatTurn answer(const courses::UserAccount& user, courses::CourseId course_id, const std::string& question,
                    PromptMode mode, std::optional<std::size_t> k = std::nullopt);

    /// Owners see every turn (optionally filtered by user); other readers see
    /// only their own.
    std::vector<ChatTurn> list_turns(const courses::UserAccount& actor, courses::CourseId course_id,
                                     const TurnFilter& filter = {});

    const ChatOptions& options() const noexcept { return options_; }

private:
    ChatTurn persist(ChatTurn turn);

    Database& db_;
    courses::CourseDirectory& directory_;
    IndexRegistry& registry_;
    EmbeddingProvider& embedder_;
    LlmClient* llm_;
    ChatOptions options_;
    LlmClient* keyword_llm_;
};

}  // namespace coursekb::chat
