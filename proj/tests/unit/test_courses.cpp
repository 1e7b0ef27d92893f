// SPDX-License-Identifier: Apache-2.0
#include "coursekb/courses.hpp"
#include "coursekb/error.hpp"

#include <doctest.h>
#include <sodium.h>

#include <functional>
#include <memory>

using namespace coursekb;
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

struct Fixture {
    std::int64_t clock = 1'000'000;
    Database db{":memory:"};
    StubPaymentGateway gateway;
    std::unique_ptr<CourseDirectory> dir;

    Fixture() {
        REQUIRE(sodium_init() >= 0);
        DirectoryOptions o;
        o.pwhash_opslimit = crypto_pwhash_OPSLIMIT_MIN;
        o.pwhash_memlimit = crypto_pwhash_MEMLIMIT_MIN;
        o.token_ttl_ms = 60'000;
        o.clock = [this] { return clock; };
        dir = std::make_unique<CourseDirectory>(db, gateway, o);
    }

    UserAccount active(const std::string& name, Role role) {
        const auto plan = role == Role::instructor ? Plan::instructor_basic : Plan::learner_basic;
        const auto id = dir->register_user(name, name + "@example.org", "password-" + name, role, plan);
        dir->process_payment(id, plan);
        return *dir->find_user(id);
    }
};

}  // namespace

TEST_SUITE("courses") {

TEST_CASE("registration validates input and rejects duplicates") {
    Fixture f;
    const auto id = f.dir->register_user("ana", "ana@example.org", "long-enough", Role::learner, Plan::learner_basic);
    CHECK(id > 0);
    CHECK(code_of([&] { f.dir->register_user("ana", "x@example.org", "long-enough", Role::learner, Plan::learner_basic); }) ==
          ErrorCode::username_taken);
    CHECK(code_of([&] { f.dir->register_user("bo", "x@example.org", "short", Role::learner, Plan::learner_basic); }) ==
          ErrorCode::weak_password);
    CHECK(code_of([&] { f.dir->register_user("bo", "no-at-sign", "long-enough", Role::learner, Plan::learner_basic); }) ==
          ErrorCode::invalid_argument);
    CHECK(code_of([&] { f.dir->register_user("", "b@example.org", "long-enough", Role::learner, Plan::learner_basic); }) ==
          ErrorCode::invalid_argument);
    CHECK(code_of([&] {
              f.dir->register_user("bo", "b@example.org", "long-enough", Role::learner, Plan::instructor_basic);
          }) == ErrorCode::invalid_argument);
}

TEST_CASE("login requires a confirmed payment") {
    Fixture f;
    const auto id = f.dir->register_user("ana", "ana@example.org", "long-enough", Role::learner, Plan::learner_basic);
    CHECK(code_of([&] { f.dir->login("ana", "long-enough"); }) == ErrorCode::payment_required);
    CHECK_FALSE(f.dir->is_activated(id));

    const auto p = f.dir->process_payment(id, Plan::learner_basic);
    CHECK(p.status == PaymentStatus::confirmed);
    CHECK(p.amount == plan_amount(Plan::learner_basic));
    CHECK(p.merchant_txn_id == "TEST-" + std::to_string(p.payment_id));
    CHECK(f.dir->is_activated(id));

    // Paying again is idempotent for an already-confirmed plan.
    CHECK(f.dir->process_payment(id, Plan::learner_basic).payment_id == p.payment_id);

    const auto s = f.dir->login("ana", "long-enough");
    CHECK(s.token.size() == 64);
    CHECK(s.expires_at_ms == f.clock + 60'000);
    CHECK(f.dir->authenticate(s.token).username == "ana");
}

TEST_CASE("gateway outcomes") {
    Fixture f;
    const auto id = f.dir->register_user("ana", "ana@example.org", "long-enough", Role::learner, Plan::learner_basic);

    f.gateway.set_behaviour(StubPaymentGateway::Behaviour::fail);
    CHECK(code_of([&] { f.dir->process_payment(id, Plan::learner_basic); }) == ErrorCode::payment_failed);
    f.gateway.set_behaviour(StubPaymentGateway::Behaviour::unreachable);
    CHECK(code_of([&] { f.dir->process_payment(id, Plan::learner_basic); }) == ErrorCode::gateway_unreachable);
    f.gateway.set_behaviour(StubPaymentGateway::Behaviour::stay_pending);
    CHECK(f.dir->process_payment(id, Plan::learner_basic).status == PaymentStatus::pending);
    CHECK(code_of([&] { f.dir->login("ana", "long-enough"); }) == ErrorCode::payment_required);

    const auto history = f.dir->payments_for(id);
    REQUIRE(history.size() == 3);
    CHECK(history[0].status == PaymentStatus::failed);
    CHECK(history[1].status == PaymentStatus::failed);
    CHECK(history[2].status == PaymentStatus::pending);

    f.gateway.set_behaviour(StubPaymentGateway::Behaviour::confirm);
    f.dir->process_payment(id, Plan::learner_basic);
    CHECK_NOTHROW(f.dir->login("ana", "long-enough"));
    CHECK(code_of([&] { f.dir->process_payment(9999, Plan::learner_basic); }) == ErrorCode::not_found);
}

TEST_CASE("bad credentials look the same for unknown users and wrong passwords") {
    Fixture f;
    f.active("ana", Role::learner);
    CHECK(code_of([&] { f.dir->login("ana", "wrong-password"); }) == ErrorCode::invalid_credentials);
    CHECK(code_of([&] { f.dir->login("nobody", "wrong-password"); }) == ErrorCode::invalid_credentials);
}

TEST_CASE("tokens expire and can be revoked") {
    Fixture f;
    f.active("ana", Role::learner);
    const auto s = f.dir->login("ana", "password-ana");
    f.clock += 59'999;
    CHECK_NOTHROW(f.dir->authenticate(s.token));
    f.clock += 1;
    CHECK(code_of([&] { f.dir->authenticate(s.token); }) == ErrorCode::unauthorized);

    const auto s2 = f.dir->login("ana", "password-ana");
    f.dir->logout(s2.token);
    CHECK(code_of([&] { f.dir->authenticate(s2.token); }) == ErrorCode::unauthorized);
    CHECK(code_of([&] { f.dir->authenticate(""); }) == ErrorCode::unauthorized);
    CHECK(code_of([&] { f.dir->authenticate("deadbeef"); }) == ErrorCode::unauthorized);
}

TEST_CASE("password reset is single-use, expires and revokes sessions") {
    Fixture f;
    f.active("ana", Role::learner);
    const auto session = f.dir->login("ana", "password-ana");
    const auto token = f.dir->request_password_reset("ana");
    CHECK(code_of([&] { f.dir->reset_password(token, "short"); }) == ErrorCode::weak_password);
    f.dir->reset_password(token, "brand-new-secret");
    CHECK(code_of([&] { f.dir->authenticate(session.token); }) == ErrorCode::unauthorized);
    CHECK(code_of([&] { f.dir->login("ana", "password-ana"); }) == ErrorCode::invalid_credentials);
    CHECK_NOTHROW(f.dir->login("ana", "brand-new-secret"));
    CHECK(code_of([&] { f.dir->reset_password(token, "another-secret"); }) == ErrorCode::unauthorized);

    const auto stale = f.dir->request_password_reset("ana");
    f.clock += 2LL * 60 * 60 * 1000;
    CHECK(code_of([&] { f.dir->reset_password(stale, "another-secret"); }) == ErrorCode::unauthorized);
    CHECK(code_of([&] { f.dir->request_password_reset("nobody"); }) == ErrorCode::not_found);
}

TEST_CASE("course creation and slugs") {
    Fixture f;
    const auto teacher = f.active("tess", Role::instructor);
    const auto learner = f.active("lee", Role::learner);
    const auto c = f.dir->create_course(teacher, "Data Science 2025", Visibility::public_);
    CHECK(c.slug == "data-science-2025");
    CHECK(c.owner_id == teacher.user_id);
    CHECK(code_of([&] { f.dir->create_course(teacher, "data science 2025!", Visibility::private_); }) ==
          ErrorCode::duplicate_slug);
    CHECK(code_of([&] { f.dir->create_course(learner, "Mine", Visibility::public_); }) == ErrorCode::access_denied);
    CHECK(code_of([&] { f.dir->create_course(teacher, "   ", Visibility::public_); }) == ErrorCode::invalid_argument);
    CHECK(f.dir->find_course_by_slug("data-science-2025")->course_id == c.course_id);
}

TEST_CASE("private courses are visible only to owner and grantees") {
    Fixture f;
    const auto owner = f.active("owner", Role::instructor);
    const auto other = f.active("other", Role::instructor);
    const auto learner = f.active("lee", Role::learner);
    const auto pub = f.dir->create_course(owner, "Open Course", Visibility::public_);
    const auto priv = f.dir->create_course(owner, "Closed Course", Visibility::private_);

    CHECK(f.dir->can_read(learner, pub));
    CHECK_FALSE(f.dir->can_read(learner, priv));
    CHECK(code_of([&] { f.dir->require_reader(learner, priv.course_id); }) == ErrorCode::access_denied);
    CHECK(code_of([&] { f.dir->require_reader(learner, 12345); }) == ErrorCode::course_not_found);
    CHECK(f.dir->list_accessible(learner).size() == 1);

    CHECK(code_of([&] { f.dir->grant_access(other, priv.course_id, learner.user_id); }) == ErrorCode::access_denied);
    CHECK(code_of([&] { f.dir->grant_access(owner, pub.course_id, learner.user_id); }) ==
          ErrorCode::not_private_course);
    CHECK(code_of([&] { f.dir->grant_access(owner, priv.course_id, 777); }) == ErrorCode::not_found);

    f.dir->grant_access(owner, priv.course_id, learner.user_id);
    f.dir->grant_access(owner, priv.course_id, learner.user_id);  // idempotent
    CHECK(f.dir->can_read(learner, priv));
    CHECK(f.dir->list_accessible(learner).size() == 2);
    const auto grants = f.dir->list_grants(owner, priv.course_id);
    REQUIRE(grants.size() == 1);
    CHECK(grants[0].granted_by == owner.user_id);
    CHECK(code_of([&] { f.dir->require_owner(learner, priv.course_id); }) == ErrorCode::access_denied);

    f.dir->revoke_access(owner, priv.course_id, learner.user_id);
    CHECK_FALSE(f.dir->can_read(learner, priv));
    CHECK(f.dir->list_grants(owner, priv.course_id).empty());
}

TEST_CASE("enum names round trip") {
    CHECK(parse_role(role_name(Role::instructor)) == Role::instructor);
    CHECK(parse_plan(plan_name(Plan::learner_basic)) == Plan::learner_basic);
    CHECK(parse_visibility("private") == Visibility::private_);
    CHECK(parse_payment_status(payment_status_name(PaymentStatus::failed)) == PaymentStatus::failed);
    CHECK(code_of([] { parse_role("admin"); }) == ErrorCode::invalid_argument);
}

}  // TEST_SUITE
