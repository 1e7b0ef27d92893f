// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/db.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coursekb::courses {

using UserId = std::int64_t;
using CourseId = std::int64_t;

enum class Role { instructor, learner };
enum class Plan { learner_basic, instructor_basic };
enum class PaymentStatus { pending, confirmed, failed };
enum class Visibility { public_, private_ };

std::string_view role_name(Role r) noexcept;
std::string_view plan_name(Plan p) noexcept;
std::string_view payment_status_name(PaymentStatus s) noexcept;
std::string_view visibility_name(Visibility v) noexcept;
Role parse_role(std::string_view s);
Plan parse_plan(std::string_view s);
PaymentStatus parse_payment_status(std::string_view s);
Visibility parse_visibility(std::string_view s);
/// Price in minor currency units.
std::int64_t plan_amount(Plan p) noexcept;

struct UserAccount {
    UserId user_id = 0;
    std::string username;
    std::string email;
    Role role = Role::learner;
    std::int64_t created_at_ms = 0;
};

struct PaymentRecord {
    std::int64_t payment_id = 0;
    UserId user_id = 0;
    Plan plan = Plan::learner_basic;
    std::int64_t amount = 0;
    std::string merchant_txn_id;
    PaymentStatus status = PaymentStatus::pending;
    std::int64_t created_at_ms = 0;
};

struct Course {
    CourseId course_id = 0;
    std::string title;
    std::string slug;
    Visibility visibility = Visibility::public_;
    UserId owner_id = 0;
    std::int64_t created_at_ms = 0;

    bool is_private() const noexcept { return visibility == Visibility::private_; }
};

struct AccessGrant {
    CourseId course_id = 0;
    UserId user_id = 0;
    UserId granted_by = 0;
    std::int64_t granted_at_ms = 0;
};

struct SessionToken {
    std::string token;  // 256-bit random, hex
    std::int64_t expires_at_ms = 0;
};

// ---- payment gateway contract ---------------------------------------------

struct PaymentInitiation {
    std::string merchant_txn_id;
    std::string redirect_ref;
};

class PaymentGateway {
public:
    virtual ~PaymentGateway() = default;
    /// Throws gateway_unreachable on transport failure.
    virtual PaymentInitiation initiate(std::int64_t payment_id, UserId user, Plan plan, std::int64_t amount) = 0;
    virtual PaymentStatus status(const std::string& merchant_txn_id) = 0;
};

/// Deterministic gateway: merchant_txn_id = "TEST-" + payment_id and every
/// transaction confirms unless a behaviour override is set.
class StubPaymentGateway : public PaymentGateway {
public:
    enum class Behaviour { confirm, fail, unreachable, stay_pending };

    explicit StubPaymentGateway(Behaviour behaviour = Behaviour::confirm) : behaviour_(behaviour) {}
    void set_behaviour(Behaviour b);

    PaymentInitiation initiate(std::int64_t payment_id, UserId user, Plan plan, std::int64_t amount) override;
    PaymentStatus status(const std::string& merchant_txn_id) override;

private:
    std::mutex mu_;
    Behaviour behaviour_;
};

// ---- directory -------------------------------------------------------------

struct DirectoryOptions {
    /// libsodium argon2id cost; tests lower these to the library minimum.
    unsigned long long pwhash_opslimit = 0;  // 0 = interactive default
    std::size_t pwhash_memlimit = 0;
    std::int64_t token_ttl_ms = 24LL * 60 * 60 * 1000;
    int payment_polls = 3;
    std::function<std::int64_t()> clock;
};

/// Identity, subscription gating, course lifecycle and the grant-based
/// privacy model, persisted in the relational store.
class CourseDirectory {
public:
    CourseDirectory(Database& db, PaymentGateway& gateway, DirectoryOptions options = {});

    UserId register_user(const std::string& username, const std::string& email, const std::string& password,
                         Role role, Plan plan);
    PaymentRecord process_payment(UserId user_id, Plan plan);
    SessionToken login(const std::string& username, const std::string& password);
    void logout(const std::string& token);
    /// Throws unauthorized for unknown or expired tokens.
    UserAccount authenticate(const std::string& token);

    std::string request_password_reset(const std::string& username);
    void reset_password(const std::string& reset_token, const std::string& new_password);

    Course create_course(const UserAccount& actor, const std::string& title, Visibility visibility);
    void grant_access(const UserAccount& actor, CourseId course_id, UserId user_id);
    void revoke_access(const UserAccount& actor, CourseId course_id, UserId user_id);
    std::vector<Course> list_accessible(const UserAccount& actor);
    std::vector<AccessGrant> list_grants(const UserAccount& actor, CourseId course_id);

    std::optional<UserAccount> find_user(UserId id);
    std::optional<Course> find_course(CourseId id);
    std::optional<Course> find_course_by_slug(const std::string& slug);
    std::vector<PaymentRecord> payments_for(UserId id);
    bool is_activated(UserId id);

    bool can_read(const UserAccount& actor, const Course& course);
    /// Course the actor may read; course_not_found / access_denied otherwise.
    Course require_reader(const UserAccount& actor, CourseId course_id);
    /// Course the actor owns; course_not_found / access_denied otherwise.
    Course require_owner(const UserAccount& actor, CourseId course_id);

    std::int64_t now() const;

private:
    std::string hash_password(const std::string& password) const;
    bool verify_password(const std::string& hash, const std::string& password) const;

    Database& db_;
    PaymentGateway& gateway_;
    DirectoryOptions options_;
    std::string dummy_hash_;
};

}  // namespace coursekb::courses
