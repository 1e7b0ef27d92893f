// SPDX-License-Identifier: Apache-2.0
#include "coursekb/analytics.hpp"
#include "coursekb/error.hpp"

#include "support/support.hpp"

#include <doctest.h>

using namespace coursekb;
using namespace coursekb::analytics;
using namespace coursekb::courses;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::internal;
}

std::vector<QuizQuestion> manual_questions(std::size_t n) {
    std::vector<QuizQuestion> qs;
    for (std::size_t i = 0; i < n; ++i) {
        QuizQuestion q;
        q.question_text = "Question " + std::to_string(i + 1);
        q.options = {"a", "b", "c", "d"};
        q.correct_index = static_cast<int>(i % 4);
        qs.push_back(q);
    }
    return qs;
}

/// Answers getting exactly `right` of the quiz's questions correct.
std::vector<int> answers_scoring(const Quiz& quiz, std::size_t right) {
    std::vector<int> out;
    for (std::size_t i = 0; i < quiz.questions.size(); ++i) {
        const int c = quiz.questions[i].correct_index;
        out.push_back(i < right ? c : (c + 1) % 4);
    }
    return out;
}

constexpr const char* kModuleText =
    "Entropy measures impurity. Entropy is zero for a pure node and entropy peaks for balanced classes.\n\n"
    "Gini impurity is cheaper than entropy. Gini ranges from zero to one half for binary labels.\n\n"
    "Bagging trains trees on bootstrap samples. Bagging reduces variance of unstable trees.\n\n"
    "Boosting adds trees sequentially. Boosting reduces bias by fitting residuals.\n\n"
    "Pruning removes branches. Pruning trades training accuracy for generalisation.";

}  // namespace

TEST_SUITE("analytics") {

TEST_CASE("three students struggling with Module 3 of DS2025") {
    auto h = testkit::make_harness();
    auto& a = h->analytics();
    const auto owner = testkit::make_user(*h, "prof", Role::instructor);
    const auto ds = h->directory().create_course(owner, "DS2025", Visibility::public_);
    const auto quiz = a.store_quiz(ds.course_id, "Module 3", manual_questions(10), "manual");

    std::vector<UserAccount> students;
    for (const char* n : {"s1", "s2", "s3", "s4", "s5"}) students.push_back(testkit::make_user(*h, n, Role::learner));
    // s1..s3 never reach 0.5 (best 0.3); s4 fails once then passes; s5 passes.
    for (int i = 0; i < 3; ++i) {
        a.record_attempt(students[i].user_id, quiz.quiz_id, answers_scoring(quiz, 1));
        a.record_attempt(students[i].user_id, quiz.quiz_id, answers_scoring(quiz, 3));
    }
    a.record_attempt(students[3].user_id, quiz.quiz_id, answers_scoring(quiz, 2));
    a.record_attempt(students[3].user_id, quiz.quiz_id, answers_scoring(quiz, 5));
    a.record_attempt(students[4].user_id, quiz.quiz_id, answers_scoring(quiz, 9));

    const auto report = a.weak_module_report(ds.course_id);
    CHECK(report == std::map<std::string, std::size_t>{{"Module 3", 3}});
    CHECK(weak_modules_csv(report) == "module_label,weak_user_count\nModule 3,3\n");
}

TEST_CASE("a course where everyone passes reports zero everywhere") {
    auto h = testkit::make_harness();
    auto& a = h->analytics();
    const auto owner = testkit::make_user(*h, "prof", Role::instructor);
    const auto c = h->directory().create_course(owner, "Calm Course", Visibility::public_);
    const auto m1 = a.store_quiz(c.course_id, "Module 1", manual_questions(4), "manual");
    const auto m2 = a.store_quiz(c.course_id, "Module 2", manual_questions(4), "manual");
    a.store_quiz(c.course_id, "Module 3", manual_questions(4), "manual");  // no attempts yet
    for (const char* n : {"p1", "p2"}) {
        const auto u = testkit::make_user(*h, n, Role::learner);
        a.record_attempt(u.user_id, m1.quiz_id, answers_scoring(m1, 2));
        a.record_attempt(u.user_id, m2.quiz_id, answers_scoring(m2, 4));
    }
    const auto report = a.weak_module_report(c.course_id);
    CHECK(report == std::map<std::string, std::size_t>{{"Module 1", 0}, {"Module 2", 0}, {"Module 3", 0}});
    // The threshold is strict: 0.5 is not weak, but raising it makes it so.
    CHECK(a.weak_module_report(c.course_id, 0.75).at("Module 1") == 2);
    CHECK(code_of([&] { a.weak_module_report(c.course_id, 1.5); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { a.weak_module_report(4242); }) == ErrorCode::course_not_found);
}

TEST_CASE("weak-module aggregation counts distinct users by best score") {
    auto attempt = [](UserId u, std::size_t correct, std::size_t total) {
        QuizAttempt a;
        a.user_id = u;
        a.correct = correct;
        a.total = total;
        return a;
    };
    const std::vector<std::pair<std::string, QuizAttempt>> attempts = {
        {"A", attempt(1, 0, 4)}, {"A", attempt(1, 1, 4)}, {"A", attempt(2, 3, 4)},
        {"B", attempt(1, 4, 4)}, {"B", attempt(3, 1, 3)},
    };
    const auto r = weak_modules_from(attempts, {"A", "B", "C"}, 0.5);
    CHECK(r == std::map<std::string, std::size_t>{{"A", 1}, {"B", 1}, {"C", 0}});
}

TEST_CASE("attempts are scored against the stored key") {
    auto h = testkit::make_harness();
    auto& a = h->analytics();
    const auto owner = testkit::make_user(*h, "prof", Role::instructor);
    const auto c = h->directory().create_course(owner, "Scoring", Visibility::public_);
    const auto quiz = a.store_quiz(c.course_id, "M", manual_questions(4), "manual");
    const auto got = a.get_quiz(quiz.quiz_id);
    CHECK(got.questions == quiz.questions);
    CHECK(got.source == "manual");

    const auto att = a.record_attempt(owner.user_id, quiz.quiz_id, answers_scoring(quiz, 3));
    CHECK(att.correct == 3);
    CHECK(att.total == 4);
    CHECK(att.score() == 0.75);
    CHECK(code_of([&] { a.record_attempt(owner.user_id, quiz.quiz_id, {0, 1}); }) == ErrorCode::length_mismatch);
    CHECK(code_of([&] { a.record_attempt(owner.user_id, quiz.quiz_id, {0, 1, 2, 7}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { a.get_quiz(999); }) == ErrorCode::quiz_not_found);
    CHECK(a.list_quizzes(c.course_id).size() == 1);
}

TEST_CASE("cloze quizzes are deterministic and well formed") {
    auto h = testkit::make_harness(testkit::test_config(), false);
    const auto owner = testkit::make_user(*h, "prof", Role::instructor);
    const auto c = h->directory().create_course(owner, "Trees", Visibility::public_);
    testkit::index_text(*h, c, kModuleText);
    const auto index = h->registry().get(c.slug);

    const auto qs = cloze_questions(*index, "entropy", 3);
    REQUIRE(qs.size() == 3);
    CHECK(qs == cloze_questions(*index, "entropy", 3));
    // The best-matching chunk comes first; its most frequent term is blanked.
    CHECK(qs[0].question_text.find("_____") != std::string::npos);
    CHECK(qs[0].options[static_cast<std::size_t>(qs[0].correct_index)] == "entropy");
    CHECK(qs[0].question_text.find("ntropy") == std::string::npos);
    for (const auto& q : qs) {
        std::set<std::string> distinct(q.options.begin(), q.options.end());
        CHECK(distinct.size() == 4);
        CHECK(q.correct_index >= 0);
        CHECK(q.correct_index < 4);
    }
    CHECK(code_of([&] { cloze_questions(*index, "x", 50); }) == ErrorCode::insufficient_content);

    const auto quiz = h->analytics().generate_quiz(c.course_id, *index, "entropy", 2, nullptr);
    CHECK(quiz.source == "cloze");
    CHECK(quiz.questions.size() == 2);
}

TEST_CASE("llm quizzes are used when the reply parses, otherwise cloze") {
    auto h = testkit::make_harness();
    const auto owner = testkit::make_user(*h, "prof", Role::instructor);
    const auto c = h->directory().create_course(owner, "Trees", Visibility::public_);
    testkit::index_text(*h, c, kModuleText);
    const auto index = h->registry().get(c.slug);

    h.llm->set_reply(
        "Here you go:\n{\"questions\":[{\"question_text\":\"What does bagging reduce?\","
        "\"options\":[\"bias\",\"variance\",\"depth\",\"entropy\"],\"correct_index\":1}]}");
    const auto q1 = h->analytics().generate_quiz(c.course_id, *index, "bagging", 1, h.llm);
    CHECK(q1.source == "llm");
    CHECK(q1.questions[0].correct_index == 1);

    h.llm->set_reply("not json at all");
    CHECK(h->analytics().generate_quiz(c.course_id, *index, "bagging", 1, h.llm).source == "cloze");

    CHECK(code_of([] { parse_quiz_payload(R"({"questions":[{"question_text":"q","options":["a"],"correct_index":0}]})"); }) ==
          ErrorCode::invalid_argument);
}

TEST_CASE("time spent averages completed sessions") {
    auto h = testkit::make_harness();
    auto& a = h->analytics();
    const auto owner = testkit::make_user(*h, "prof", Role::instructor);
    const auto learner = testkit::make_user(*h, "lee", Role::learner);
    const auto c = h->directory().create_course(owner, "Timing", Visibility::public_);
    CHECK(a.avg_time_spent(c.course_id) == 0.0);
    a.record_session(learner.user_id, c.course_id, 1'000, 61'000);    // 60 s
    a.record_session(learner.user_id, c.course_id, 5'000, 125'000);   // 120 s
    a.record_session(learner.user_id, c.course_id, 9'000, std::nullopt);  // open: ignored
    CHECK(a.avg_time_spent(c.course_id) == 90.0);
    CHECK(time_spent_csv(c.course_id, 90.0) == "course_id,avg_seconds\n" + std::to_string(c.course_id) + ",90\n");
    CHECK(code_of([&] { a.record_session(learner.user_id, c.course_id, 10, 5); }) == ErrorCode::invalid_argument);

    const auto s = a.start_session(learner.user_id, c.course_id);
    CHECK(code_of([&] { a.end_session(owner.user_id, s.session_id); }) == ErrorCode::access_denied);
    const auto ended = a.end_session(learner.user_id, s.session_id);
    REQUIRE(ended.ended_at_ms.has_value());
    CHECK(*ended.ended_at_ms >= s.started_at_ms);
    CHECK(a.end_session(learner.user_id, s.session_id).ended_at_ms == ended.ended_at_ms);
}

TEST_CASE("csv labels with separators are quoted") {
    CHECK(weak_modules_csv({{"Unit 1, part \"a\"", 2}}) == "module_label,weak_user_count\n\"Unit 1, part \"\"a\"\"\",2\n");
}

}  // TEST_SUITE
