// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/courses.hpp"
#include "coursekb/db.hpp"
#include "coursekb/index.hpp"
#include "coursekb/llm.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coursekb::analytics {

using QuizId = std::int64_t;

struct QuizQuestion {
    std::string question_text;
    std::array<std::string, 4> options;
    int correct_index = 0;

    bool operator==(const QuizQuestion&) const = default;
};

struct Quiz {
    QuizId quiz_id = 0;
    courses::CourseId course_id = 0;
    std::string module_label;
    std::vector<QuizQuestion> questions;
    std::string source;  // "llm" | "cloze"
};

struct QuizAttempt {
    std::int64_t attempt_id = 0;
    QuizId quiz_id = 0;
    courses::UserId user_id = 0;
    std::vector<int> answers;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::int64_t completed_at_ms = 0;

    double score() const noexcept { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct SessionLog {
    std::int64_t session_id = 0;
    courses::UserId user_id = 0;
    courses::CourseId course_id = 0;
    std::int64_t started_at_ms = 0;
    std::optional<std::int64_t> ended_at_ms;
};

/// Deterministic cloze quiz: the n chunks scoring highest by BM25 for the
/// module label's terms (chunk id breaking ties) each yield a question whose
/// blank is the chunk's highest-TF non-stopword term; distractors are the top
/// terms of other chunks.
std::vector<QuizQuestion> cloze_questions(const CourseIndex& index, const std::string& module_label,
                                          std::size_t n_questions);

/// Parses {"questions": [{"question_text", "options": [4], "correct_index"}]}.
/// Throws invalid_argument when the payload does not have that shape.
std::vector<QuizQuestion> parse_quiz_payload(std::string_view json_text);

/// Weak-module counts: distinct users whose best score in a module is below
/// `threshold`; modules with quizzes but no weak users report 0.
std::map<std::string, std::size_t> weak_modules_from(const std::vector<std::pair<std::string, QuizAttempt>>& attempts,
                                                     const std::vector<std::string>& module_labels, double threshold);

std::string weak_modules_csv(const std::map<std::string, std::size_t>& report);
std::string time_spent_csv(courses::CourseId course_id, double avg_seconds);

class AnalyticsService {
public:
    AnalyticsService(Database& db, courses::CourseDirectory& directory);

    /// `llm` may be null; on a null client or an unusable reply the cloze
    /// fallback is used.
    Quiz generate_quiz(courses::CourseId course_id, const CourseIndex& index, const std::string& module_label,
                       std::size_t n_questions, LlmClient* llm);
    Quiz store_quiz(courses::CourseId course_id, const std::string& module_label,
                    const std::vector<QuizQuestion>& questions, const std::string& source);
    Quiz get_quiz(QuizId quiz_id);
    std::vector<Quiz> list_quizzes(courses::CourseId course_id);

    QuizAttempt record_attempt(courses::UserId user_id, QuizId quiz_id, const std::vector<int>& answers);

    std::map<std::string, std::size_t> weak_module_report(courses::CourseId course_id, double threshold = 0.5);
    double avg_time_spent(courses::CourseId course_id);

    SessionLog start_session(courses::UserId user_id, courses::CourseId course_id);
    SessionLog end_session(courses::UserId user_id, std::int64_t session_id);
    /// Inserts a completed session directly; used for imports and fixtures.
    SessionLog record_session(courses::UserId user_id, courses::CourseId course_id, std::int64_t started_at_ms,
                              std::optional<std::int64_t> ended_at_ms);
    std::optional<SessionLog> find_session(std::int64_t session_id);

private:
    Database& db_;
    courses::CourseDirectory& directory_;
};

}  // namespace coursekb::analytics
