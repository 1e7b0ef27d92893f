// SPDX-License-Identifier: Apache-2.0
#include "coursekb/chat.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"

#include <json.hpp>

#include <chrono>

namespace coursekb::chat {

using nlohmann::json;

ChatService::ChatService(Database& db, courses::CourseDirectory& directory, IndexRegistry& registry,
                         EmbeddingProvider& embedder, LlmClient* llm, ChatOptions options, LlmClient* keyword_llm)
    : db_(db),
      directory_(directory),
      registry_(registry),
      embedder_(embedder),
      llm_(llm),
      options_(std::move(options)),
      keyword_llm_(keyword_llm) {}

ChatTurn ChatService::answer(const courses::UserAccount& user, courses::CourseId course_id,
                             const std::string& question, PromptMode mode, std::optional<std::size_t> k) {
    const auto course = directory_.require_reader(user, course_id);
    if (text::trim(question).empty()) fail(ErrorCode::empty_query, "question is empty");
    const auto index = registry_.get(course.slug);

    const auto started = std::chrono::steady_clock::now();
    auto retrieval = options_.retrieval;
    if (k) retrieval.k = *k;
    if (auto it = options_.course_bm25.find(course.slug); it != options_.course_bm25.end()) retrieval.bm25 = it->second;
    if (retrieval.k == 0) fail(ErrorCode::invalid_argument, "k must be at least 1");

    const auto query = make_query(question, *index, embedder_, keyword_llm_, options_.max_keywords);
    auto results = hybrid_retrieve(query, *index, retrieval);
    if (results.empty() && mode != PromptMode::restricted) {
        // Open-ended modes always answer from the nearest chunks.
        retrieval.min_cosine = -2.0;
        results = hybrid_retrieve(query, *index, retrieval);
    }

    ChatTurn turn;
    turn.user_id = user.user_id;
    turn.course_id = course_id;
    turn.mode = mode;
    turn.question = question;
    turn.model_id = llm_ ? llm_->model_id() : std::string("none");
    std::vector<Chunk> context;
    for (const auto& r : results) {
        turn.context_chunk_ids.push_back(r.chunk_id);
        context.push_back(index->chunks.at(r.chunk_id));
    }
    turn.rendered_prompt = render_prompt(mode, context, question);

    const auto elapsed = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
            .count();
    };

    if (mode == PromptMode::restricted && results.empty() && options_.refusal_guard) {
        turn.answer = std::string(kRefusalAnswer);
        turn.model_id = "guard";
        turn.latency_ms = elapsed();
        return persist(std::move(turn));
    }

    try {
        if (!llm_) fail(ErrorCode::llm_unavailable, "no LLM endpoint configured");
        ChatRequest req;
        req.model = llm_->model_id();
        req.temperature = options_.temperature;
        req.messages.push_back({"user", turn.rendered_prompt});
        turn.answer = llm_->chat(req).content;
    } catch (const Error& e) {
        turn.answer.clear();
        turn.error = std::string(code_name(ErrorCode::llm_unavailable));
        turn.latency_ms = elapsed();
        persist(std::move(turn));
        if (e.code() == ErrorCode::llm_unavailable) throw;
        fail(ErrorCode::llm_unavailable, e.what());
    }
    turn.latency_ms = elapsed();
    return persist(std::move(turn));
}

ChatTurn ChatService::persist(ChatTurn turn) {
    turn.created_at_ms = directory_.now();
    json ids = turn.context_chunk_ids;
    auto lock = db_.lock();
    auto stmt = db_.prepare(
        "INSERT INTO chat_turns (user_id, course_id, mode, question, context_chunk_ids, rendered_prompt, answer, "
        "model_id, error, created_at, latency_ms) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)");
    stmt.bind(1, turn.user_id)
        .bind(2, turn.course_id)
        .bind(3, mode_name(turn.mode))
        .bind(4, turn.question)
        .bind(5, ids.dump())
        .bind(6, turn.rendered_prompt)
        .bind(7, turn.answer)
        .bind(8, turn.model_id)
        .bind(9, turn.error)
        .bind(10, turn.created_at_ms)
        .bind(11, turn.latency_ms);
    stmt.run();
    turn.turn_id = db_.last_insert_id();
    return turn;
}

std::vector<ChatTurn> ChatService::list_turns(const courses::UserAccount& actor, courses::CourseId course_id,
                                              const TurnFilter& filter) {
    const auto course = directory_.require_reader(actor, course_id);
    auto effective = filter;
    if (course.owner_id != actor.user_id) {
        if (filter.user_id && *filter.user_id != actor.user_id) {
            fail(ErrorCode::access_denied, "learners may list only their own turns");
        }
        effective.user_id = actor.user_id;
    }

    auto lock = db_.lock();
    auto stmt = db_.prepare(
        "SELECT turn_id, user_id, course_id, mode, question, context_chunk_ids, rendered_prompt, answer, model_id, "
        "error, created_at, latency_ms FROM chat_turns WHERE course_id = ?1 "
        "AND (?2 IS NULL OR user_id = ?2) AND (?3 IS NULL OR created_at >= ?3) AND (?4 IS NULL OR created_at <= ?4) "
        "ORDER BY created_at, turn_id");
    stmt.bind(1, course_id).bind(2, effective.user_id).bind(3, effective.from_ms).bind(4, effective.to_ms);
    std::vector<ChatTurn> out;
    while (stmt.step()) {
        ChatTurn t;
        t.turn_id = stmt.column_int64(0);
        t.user_id = stmt.column_int64(1);
        t.course_id = stmt.column_int64(2);
        t.mode = parse_mode(stmt.column_text(3));
        t.question = stmt.column_text(4);
        t.context_chunk_ids = json::parse(stmt.column_text(5)).get<std::vector<ChunkId>>();
        t.rendered_prompt = stmt.column_text(6);
        t.answer = stmt.column_text(7);
        t.model_id = stmt.column_text(8);
        if (!stmt.column_is_null(9)) t.error = stmt.column_text(9);
        t.created_at_ms = stmt.column_int64(10);
        t.latency_ms = stmt.column_int64(11);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace coursekb::chat
