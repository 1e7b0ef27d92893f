// SPDX-License-Identifier: Apache-2.0
#include "coursekb/analytics.hpp"

#include "coursekb/error.hpp"
#include "coursekb/retrieve.hpp"
#include "coursekb/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace coursekb::analytics {

using nlohmann::json;

namespace {

constexpr std::string_view kBlank = "_____";

// Highest-TF index term of the text, earliest occurrence breaking ties, then
// the remaining terms in the same order.
std::vector<std::string> terms_by_tf(std::string_view chunk_text) {
    const auto terms = text::index_terms(chunk_text);
    std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // term -> (tf, first position)
    for (std::size_t i = 0; i < terms.size(); ++i) {
        auto [it, inserted] = stats.try_emplace(terms[i], 0, i);
        ++it->second.first;
    }
    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ordered(stats.begin(), stats.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first > b.second.first;
        return a.second.second < b.second.second;
    });
    std::vector<std::string> out;
    out.reserve(ordered.size());
    for (auto& [term, _] : ordered) out.push_back(term);
    return out;
}

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::string blank_out(std::string_view chunk_text, std::string_view term) {
    std::string out;
    std::size_t i = 0;
    while (i < chunk_text.size()) {
        if (!is_word_byte(static_cast<unsigned char>(chunk_text[i]))) {
            out.push_back(chunk_text[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < chunk_text.size() && is_word_byte(static_cast<unsigned char>(chunk_text[j]))) ++j;
        const auto word = chunk_text.substr(i, j - i);
        if (text::to_lower_ascii(word) == term) {
            out += kBlank;
        } else {
            out += word;
        }
        i = j;
    }
    return out;
}

std::vector<ChunkId> module_ranking(const CourseIndex& index, const std::string& module_label) {
    const auto terms = text::index_terms(module_label);
    const auto scores = bm25_scores(terms, index);
    std::vector<ChunkId> ids(index.n_chunks());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<ChunkId>(i);
    const auto score_of = [&](ChunkId id) {
        auto it = scores.find(id);
        return it == scores.end() ? 0.0 : it->second;
    };
    std::stable_sort(ids.begin(), ids.end(), [&](ChunkId a, ChunkId b) { return score_of(a) > score_of(b); });
    return ids;
}

std::string quiz_prompt(const CourseIndex& index, const std::vector<ChunkId>& ranking, const std::string& module_label,
                        std::size_t n) {
    std::ostringstream p;
    p << "Write " << n << " multiple-choice questions for the course module \"" << module_label
      << "\" using only the material below. Reply with JSON only, in the shape "
         "{\"questions\": [{\"question_text\": string, \"options\": [4 strings], \"correct_index\": 0-3}]}.\n\n";
    for (std::size_t i = 0; i < ranking.size() && i < 2 * n; ++i) p << index.chunks[ranking[i]].text << "\n\n";
    return p.str();
}

}  // namespace

std::vector<QuizQuestion> cloze_questions(const CourseIndex& index, const std::string& module_label,
                                          std::size_t n_questions) {
    if (n_questions == 0) fail(ErrorCode::invalid_argument, "a quiz needs at least one question");
    const auto ranking = module_ranking(index, module_label);

    std::vector<std::vector<std::string>> chunk_terms(index.n_chunks());
    for (std::size_t i = 0; i < index.n_chunks(); ++i) chunk_terms[i] = terms_by_tf(index.chunks[i].text);

    std::vector<QuizQuestion> out;
    for (auto id : ranking) {
        if (out.size() == n_questions) break;
        const auto& terms = chunk_terms[id];
        if (terms.empty()) continue;
        const auto& answer = terms.front();

        std::vector<std::string> distractors;
        const auto offer = [&](const std::string& t) {
            if (distractors.size() < 3 && t != answer &&
                std::find(distractors.begin(), distractors.end(), t) == distractors.end()) {
                distractors.push_back(t);
            }
        };
        for (auto other : ranking) {
            if (other != id && !chunk_terms[other].empty()) offer(chunk_terms[other].front());
        }
        for (std::size_t i = 1; i < terms.size(); ++i) offer(terms[i]);
        if (distractors.size() < 3) continue;

        QuizQuestion q;
        q.question_text = blank_out(index.chunks[id].text, answer);
        q.correct_index = static_cast<int>(out.size() % 4);
        std::size_t d = 0;
        for (int slot = 0; slot < 4; ++slot) q.options[slot] = slot == q.correct_index ? answer : distractors[d++];
        out.push_back(std::move(q));
    }
    if (out.size() < n_questions) {
        fail(ErrorCode::insufficient_content, "course has only " + std::to_string(out.size()) +
                                                  " chunks usable for questions, " + std::to_string(n_questions) +
                                                  " requested");
    }
    return out;
}

std::vector<QuizQuestion> parse_quiz_payload(std::string_view json_text) {
    std::vector<QuizQuestion> out;
    try {
        auto start = json_text.find('{');
        auto end = json_text.rfind('}');
        if (start == std::string_view::npos || end == std::string_view::npos || end < start) {
            fail(ErrorCode::invalid_argument, "quiz payload contains no JSON object");
        }
        const auto doc = json::parse(json_text.substr(start, end - start + 1));
        for (const auto& item : doc.at("questions")) {
            QuizQuestion q;
            q.question_text = item.at("question_text").get<std::string>();
            const auto options = item.at("options").get<std::vector<std::string>>();
            if (options.size() != 4) fail(ErrorCode::invalid_argument, "each question needs exactly 4 options");
            std::copy(options.begin(), options.end(), q.options.begin());
            q.correct_index = item.at("correct_index").get<int>();
            if (q.correct_index < 0 || q.correct_index > 3) {
                fail(ErrorCode::invalid_argument, "correct_index must be 0..3");
            }
            if (text::trim(q.question_text).empty()) fail(ErrorCode::invalid_argument, "empty question text");
            out.push_back(std::move(q));
        }
    } catch (const json::exception& ex) {
        fail(ErrorCode::invalid_argument, std::string("malformed quiz payload: ") + ex.what());
    }
    return out;
}

std::map<std::string, std::size_t> weak_modules_from(const std::vector<std::pair<std::string, QuizAttempt>>& attempts,
                                                     const std::vector<std::string>& module_labels, double threshold) {
    std::map<std::pair<std::string, courses::UserId>, double> best;
    for (const auto& [label, attempt] : attempts) {
        auto [it, inserted] = best.try_emplace({label, attempt.user_id}, attempt.score());
        if (!inserted) it->second = std::max(it->second, attempt.score());
    }
    std::map<std::string, std::size_t> report;
    for (const auto& label : module_labels) report.emplace(label, 0);
    for (const auto& [key, score] : best) {
        auto& count = report[key.first];
        if (score < threshold) ++count;
    }
    return report;
}

std::string weak_modules_csv(const std::map<std::string, std::size_t>& report) {
    std::string out = "module_label,weak_user_count\n";
    for (const auto& [label, count] : report) {
        const bool quote = label.find_first_of(",\"\n") != std::string::npos;
        if (quote) {
            out.push_back('"');
            for (char c : label) {
                if (c == '"') out.push_back('"');
                out.push_back(c);
            }
            out.push_back('"');
        } else {
            out += label;
        }
        out += "," + std::to_string(count) + "\n";
    }
    return out;
}

std::string time_spent_csv(courses::CourseId course_id, double avg_seconds) {
    std::ostringstream out;
    out.precision(17);
    out << "course_id,avg_seconds\n" << course_id << "," << avg_seconds << "\n";
    return out.str();
}

// ---- AnalyticsService ------------------------------------------------------

AnalyticsService::AnalyticsService(Database& db, courses::CourseDirectory& directory)
    : db_(db), directory_(directory) {}

Quiz AnalyticsService::generate_quiz(courses::CourseId course_id, const CourseIndex& index,
                                     const std::string& module_label, std::size_t n_questions, LlmClient* llm) {
    if (!directory_.find_course(course_id)) fail(ErrorCode::course_not_found, "no such course");
    if (text::trim(module_label).empty()) fail(ErrorCode::invalid_argument, "module label must be non-empty");
    if (n_questions == 0) fail(ErrorCode::invalid_argument, "a quiz needs at least one question");

    if (llm != nullptr) {
        try {
            ChatRequest req;
            req.model = llm->model_id();
            req.messages.push_back({"user", quiz_prompt(index, module_ranking(index, module_label), module_label,
                                                        n_questions)});
            auto questions = parse_quiz_payload(llm->chat(req).content);
            if (questions.size() >= n_questions) {
                questions.resize(n_questions);
                return store_quiz(course_id, module_label, questions, "llm");
            }
        } catch (const Error&) {
            // deterministic fallback below
        }
    }
    return store_quiz(course_id, module_label, cloze_questions(index, module_label, n_questions), "cloze");
}

Quiz AnalyticsService::store_quiz(courses::CourseId course_id, const std::string& module_label,
                                  const std::vector<QuizQuestion>& questions, const std::string& source) {
    if (questions.empty()) fail(ErrorCode::invalid_argument, "a quiz needs at least one question");
    Transaction tx(db_);
    auto insert = db_.prepare("INSERT INTO quizzes (course_id, module_label, source, created_at) VALUES (?, ?, ?, ?)");
    insert.bind(1, course_id).bind(2, module_label).bind(3, source).bind(4, directory_.now());
    insert.run();
    Quiz quiz{db_.last_insert_id(), course_id, module_label, questions, source};
    auto q_insert = db_.prepare(
        "INSERT INTO quiz_questions (quiz_id, position, question_text, options, correct_index) VALUES (?, ?, ?, ?, ?)");
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        json options = std::vector<std::string>(q.options.begin(), q.options.end());
        q_insert.reset();
        q_insert.bind(1, quiz.quiz_id)
            .bind(2, static_cast<std::int64_t>(i))
            .bind(3, q.question_text)
            .bind(4, options.dump())
            .bind(5, q.correct_index);
        q_insert.run();
    }
    tx.commit();
    return quiz;
}

Quiz AnalyticsService::get_quiz(QuizId quiz_id) {
    auto lock = db_.lock();
    auto head = db_.prepare("SELECT quiz_id, course_id, module_label, source FROM quizzes WHERE quiz_id = ?");
    head.bind(1, quiz_id);
    if (!head.step()) fail(ErrorCode::quiz_not_found, "no such quiz");
    Quiz quiz{head.column_int64(0), head.column_int64(1), head.column_text(2), {}, head.column_text(3)};
    auto qs = db_.prepare(
        "SELECT question_text, options, correct_index FROM quiz_questions WHERE quiz_id = ? ORDER BY position");
    qs.bind(1, quiz_id);
    while (qs.step()) {
        QuizQuestion q;
        q.question_text = qs.column_text(0);
        const auto options = json::parse(qs.column_text(1)).get<std::vector<std::string>>();
        std::copy_n(options.begin(), std::min<std::size_t>(4, options.size()), q.options.begin());
        q.correct_index = static_cast<int>(qs.column_int64(2));
        quiz.questions.push_back(std::move(q));
    }
    return quiz;
}

std::vector<Quiz> AnalyticsService::list_quizzes(courses::CourseId course_id) {
    std::vector<QuizId> ids;
    {
        auto lock = db_.lock();
        auto stmt = db_.prepare("SELECT quiz_id FROM quizzes WHERE course_id = ? ORDER BY quiz_id");
        stmt.bind(1, course_id);
        while (stmt.step()) ids.push_back(stmt.column_int64(0));
    }
    std::vector<Quiz> out;
    for (auto id : ids) out.push_back(get_quiz(id));
    return out;
}

QuizAttempt AnalyticsService::record_attempt(courses::UserId user_id, QuizId quiz_id, const std::vector<int>& answers) {
    const auto quiz = get_quiz(quiz_id);
    if (answers.size() != quiz.questions.size()) {
        fail(ErrorCode::length_mismatch, "quiz has " + std::to_string(quiz.questions.size()) + " questions, got " +
                                             std::to_string(answers.size()) + " answers");
    }
    QuizAttempt attempt;
    attempt.quiz_id = quiz_id;
    attempt.user_id = user_id;
    attempt.answers = answers;
    attempt.total = answers.size();
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (answers[i] < 0 || answers[i] > 3) fail(ErrorCode::invalid_argument, "answers must be option indices 0..3");
        if (answers[i] == quiz.questions[i].correct_index) ++attempt.correct;
    }
    attempt.completed_at_ms = directory_.now();

    auto lock = db_.lock();
    auto stmt = db_.prepare(
        "INSERT INTO quiz_attempts (quiz_id, user_id, answers, correct, total, completed_at) VALUES (?, ?, ?, ?, ?, ?)");
    stmt.bind(1, quiz_id)
        .bind(2, user_id)
        .bind(3, json(answers).dump())
        .bind(4, static_cast<std::int64_t>(attempt.correct))
        .bind(5, static_cast<std::int64_t>(attempt.total))
        .bind(6, attempt.completed_at_ms);
    stmt.run();
    attempt.attempt_id = db_.last_insert_id();
    return attempt;
}

std::map<std::string, std::size_t> AnalyticsService::weak_module_report(courses::CourseId course_id, double threshold) {
    if (!directory_.find_course(course_id)) fail(ErrorCode::course_not_found, "no such course");
    if (!(threshold >= 0.0 && threshold <= 1.0)) fail(ErrorCode::invalid_argument, "threshold must lie in [0, 1]");

    auto lock = db_.lock();
    std::vector<std::string> labels;
    {
        auto stmt = db_.prepare("SELECT DISTINCT module_label FROM quizzes WHERE course_id = ? ORDER BY module_label");
        stmt.bind(1, course_id);
        while (stmt.step()) labels.push_back(stmt.column_text(0));
    }
    std::vector<std::pair<std::string, QuizAttempt>> attempts;
    auto stmt = db_.prepare(
        "SELECT q.module_label, a.attempt_id, a.quiz_id, a.user_id, a.correct, a.total, a.completed_at "
        "FROM quiz_attempts a JOIN quizzes q ON q.quiz_id = a.quiz_id WHERE q.course_id = ?");
    stmt.bind(1, course_id);
    while (stmt.step()) {
        QuizAttempt a;
        a.attempt_id = stmt.column_int64(1);
        a.quiz_id = stmt.column_int64(2);
        a.user_id = stmt.column_int64(3);
        a.correct = static_cast<std::size_t>(stmt.column_int64(4));
        a.total = static_cast<std::size_t>(stmt.column_int64(5));
        a.completed_at_ms = stmt.column_int64(6);
        attempts.emplace_back(stmt.column_text(0), std::move(a));
    }
    return weak_modules_from(attempts, labels, threshold);
}

double AnalyticsService::avg_time_spent(courses::CourseId course_id) {
    if (!directory_.find_course(course_id)) fail(ErrorCode::course_not_found, "no such course");
    auto lock = db_.lock();
    auto stmt = db_.prepare(
        "SELECT started_at, ended_at FROM sessions WHERE course_id = ? AND ended_at IS NOT NULL ORDER BY session_id");
    stmt.bind(1, course_id);
    double total_ms = 0.0;
    std::size_t n = 0;
    while (stmt.step()) {
        total_ms += static_cast<double>(stmt.column_int64(1) - stmt.column_int64(0));
        ++n;
    }
    return n == 0 ? 0.0 : total_ms / 1000.0 / static_cast<double>(n);
}

SessionLog AnalyticsService::start_session(courses::UserId user_id, courses::CourseId course_id) {
    return record_session(user_id, course_id, directory_.now(), std::nullopt);
}

SessionLog AnalyticsService::record_session(courses::UserId user_id, courses::CourseId course_id,
                                            std::int64_t started_at_ms, std::optional<std::int64_t> ended_at_ms) {
    if (ended_at_ms && *ended_at_ms < started_at_ms) {
        fail(ErrorCode::invalid_argument, "session cannot end before it starts");
    }
    auto lock = db_.lock();
    auto stmt = db_.prepare("INSERT INTO sessions (user_id, course_id, started_at, ended_at) VALUES (?, ?, ?, ?)");
    stmt.bind(1, user_id).bind(2, course_id).bind(3, started_at_ms).bind(4, ended_at_ms);
    stmt.run();
    return {db_.last_insert_id(), user_id, course_id, started_at_ms, ended_at_ms};
}

std::optional<SessionLog> AnalyticsService::find_session(std::int64_t session_id) {
    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT session_id, user_id, course_id, started_at, ended_at FROM sessions WHERE session_id = ?");
    stmt.bind(1, session_id);
    if (!stmt.step()) return std::nullopt;
    SessionLog s{stmt.column_int64(0), stmt.column_int64(1), stmt.column_int64(2), stmt.column_int64(3), std::nullopt};
    if (!stmt.column_is_null(4)) s.ended_at_ms = stmt.column_int64(4);
    return s;
}

SessionLog AnalyticsService::end_session(courses::UserId user_id, std::int64_t session_id) {
    auto session = find_session(session_id);
    if (!session) fail(ErrorCode::not_found, "no such session");
    if (session->user_id != user_id) fail(ErrorCode::access_denied, "session belongs to another user");
    if (session->ended_at_ms) return *session;
    const auto ended = std::max(directory_.now(), session->started_at_ms);
    auto lock = db_.lock();
    auto stmt = db_.prepare("UPDATE sessions SET ended_at = ? WHERE session_id = ? AND ended_at IS NULL");
    stmt.bind(1, ended).bind(2, session_id);
    stmt.run();
    session->ended_at_ms = ended;
    return *session;
}

}  // namespace coursekb::analytics
