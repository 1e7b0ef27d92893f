// SPDX-License-Identifier: Apache-2.0
#include "coursekb/courses.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"

#include <sodium.h>

#include <array>

namespace coursekb::courses {

namespace {

constexpr std::size_t kMinPasswordLength = 8;
constexpr std::int64_t kResetTtlMs = 60LL * 60 * 1000;

UserAccount read_user(const Statement& s) {
    UserAccount u;
    u.user_id = s.column_int64(0);
    u.username = s.column_text(1);
    u.email = s.column_text(2);
    u.role = parse_role(s.column_text(3));
    u.created_at_ms = s.column_int64(4);
    return u;
}

Course read_course(const Statement& s) {
    Course c;
    c.course_id = s.column_int64(0);
    c.title = s.column_text(1);
    c.slug = s.column_text(2);
    c.visibility = parse_visibility(s.column_text(3));
    c.owner_id = s.column_int64(4);
    c.created_at_ms = s.column_int64(5);
    return c;
}

PaymentRecord read_payment(const Statement& s) {
    PaymentRecord p;
    p.payment_id = s.column_int64(0);
    p.user_id = s.column_int64(1);
    p.plan = parse_plan(s.column_text(2));
    p.amount = s.column_int64(3);
    p.merchant_txn_id = s.column_text(4);
    p.status = parse_payment_status(s.column_text(5));
    p.created_at_ms = s.column_int64(6);
    return p;
}

constexpr std::string_view kUserColumns = "user_id, username, email, role, created_at";
constexpr std::string_view kCourseColumns = "course_id, title, slug, visibility, owner_id, created_at";
constexpr std::string_view kPaymentColumns =
    "payment_id, user_id, plan, amount, coalesce(merchant_txn_id, ''), status, created_at";

Plan plan_for(Role role) { return role == Role::instructor ? Plan::instructor_basic : Plan::learner_basic; }

}  // namespace

std::string_view role_name(Role r) noexcept { return r == Role::instructor ? "instructor" : "learner"; }
std::string_view plan_name(Plan p) noexcept { return p == Plan::instructor_basic ? "instructor_basic" : "learner_basic"; }

std::string_view payment_status_name(PaymentStatus s) noexcept {
    switch (s) {
    case PaymentStatus::pending: return "pending";
    case PaymentStatus::confirmed: return "confirmed";
    case PaymentStatus::failed: return "failed";
    }
    return "pending";
}

std::string_view visibility_name(Visibility v) noexcept { return v == Visibility::private_ ? "private" : "public"; }

Role parse_role(std::string_view s) {
    if (s == "instructor") return Role::instructor;
    if (s == "learner") return Role::learner;
    fail(ErrorCode::invalid_argument, "unknown role '" + std::string(s) + "'");
}

Plan parse_plan(std::string_view s) {
    if (s == "learner_basic") return Plan::learner_basic;
    if (s == "instructor_basic") return Plan::instructor_basic;
    fail(ErrorCode::invalid_argument, "unknown plan '" + std::string(s) + "'");
}

PaymentStatus parse_payment_status(std::string_view s) {
    if (s == "pending") return PaymentStatus::pending;
    if (s == "confirmed") return PaymentStatus::confirmed;
    if (s == "failed") return PaymentStatus::failed;
    fail(ErrorCode::invalid_argument, "unknown payment status '" + std::string(s) + "'");
}

Visibility parse_visibility(std::string_view s) {
    if (s == "public") return Visibility::public_;
    if (s == "private") return Visibility::private_;
    fail(ErrorCode::invalid_argument, "visibility must be 'public' or 'private'");
}

std::int64_t plan_amount(Plan p) noexcept { return p == Plan::instructor_basic ? 99900 : 49900; }

// ---- StubPaymentGateway ----------------------------------------------------

void StubPaymentGateway::set_behaviour(Behaviour b) {
    std::lock_guard lock(mu_);
    behaviour_ = b;
}

PaymentInitiation StubPaymentGateway::initiate(std::int64_t payment_id, UserId, Plan, std::int64_t) {
    std::lock_guard lock(mu_);
    if (behaviour_ == Behaviour::unreachable) fail(ErrorCode::gateway_unreachable, "payment gateway unreachable");
    const auto txn = "TEST-" + std::to_string(payment_id);
    return {txn, "stub://pay/" + txn};
}

PaymentStatus StubPaymentGateway::status(const std::string&) {
    std::lock_guard lock(mu_);
    switch (behaviour_) {
    case Behaviour::confirm: return PaymentStatus::confirmed;
    case Behaviour::fail: return PaymentStatus::failed;
    case Behaviour::stay_pending: return PaymentStatus::pending;
    case Behaviour::unreachable: fail(ErrorCode::gateway_unreachable, "payment gateway unreachable");
    }
    return PaymentStatus::pending;
}

// ---- CourseDirectory -------------------------------------------------------

CourseDirectory::CourseDirectory(Database& db, PaymentGateway& gateway, DirectoryOptions options)
    : db_(db), gateway_(gateway), options_(std::move(options)) {
    if (sodium_init() < 0) fail(ErrorCode::internal, "libsodium initialisation failed");
    if (options_.pwhash_opslimit == 0) options_.pwhash_opslimit = crypto_pwhash_OPSLIMIT_INTERACTIVE;
    if (options_.pwhash_memlimit == 0) options_.pwhash_memlimit = crypto_pwhash_MEMLIMIT_INTERACTIVE;
    dummy_hash_ = hash_password(text::random_hex(16));
}

std::int64_t CourseDirectory::now() const { return options_.clock ? options_.clock() : text::now_ms(); }

std::string CourseDirectory::hash_password(const std::string& password) const {
    std::array<char, crypto_pwhash_STRBYTES> out{};
    if (crypto_pwhash_str(out.data(), password.data(), password.size(), options_.pwhash_opslimit,
                          options_.pwhash_memlimit) != 0) {
        fail(ErrorCode::internal, "password hashing ran out of memory");
    }
    return std::string(out.data());
}

bool CourseDirectory::verify_password(const std::string& hash, const std::string& password) const {
    return crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) == 0;
}

UserId CourseDirectory::register_user(const std::string& username, const std::string& email,
                                      const std::string& password, Role role, Plan plan) {
    if (text::trim(username).empty() || username.size() > 64 || !text::is_valid_utf8(username)) {
        fail(ErrorCode::invalid_argument, "username must be 1-64 characters of UTF-8");
    }
    if (email.find('@') == std::string::npos) fail(ErrorCode::invalid_argument, "email address is malformed");
    if (password.size() < kMinPasswordLength) {
        fail(ErrorCode::weak_password, "password must be at least 8 characters");
    }
    if (plan != plan_for(role)) fail(ErrorCode::invalid_argument, "plan does not match the account role");

    const auto hash = hash_password(password);
    auto lock = db_.lock();
    {
        auto check = db_.prepare("SELECT 1 FROM users WHERE username = ?");
        check.bind(1, username);
        if (check.step()) fail(ErrorCode::username_taken, "username is already registered");
    }
    auto insert = db_.prepare(
        "INSERT INTO users (username, email, password_hash, role, created_at) VALUES (?, ?, ?, ?, ?)");
    insert.bind(1, username).bind(2, email).bind(3, hash).bind(4, role_name(role)).bind(5, now());
    insert.run();
    return db_.last_insert_id();
}

PaymentRecord CourseDirectory::process_payment(UserId user_id, Plan plan) {
    const auto user = find_user(user_id);
    if (!user) fail(ErrorCode::not_found, "no such user");
    if (plan != plan_for(user->role)) fail(ErrorCode::invalid_argument, "plan does not match the account role");

    for (const auto& p : payments_for(user_id)) {
        if (p.plan == plan && p.status == PaymentStatus::confirmed) return p;
    }

    std::int64_t payment_id = 0;
    {
        auto lock = db_.lock();
        auto insert = db_.prepare(
            "INSERT INTO payments (user_id, plan, amount, status, created_at) VALUES (?, ?, ?, 'pending', ?)");
        insert.bind(1, user_id).bind(2, plan_name(plan)).bind(3, plan_amount(plan)).bind(4, now());
        insert.run();
        payment_id = db_.last_insert_id();
    }

    const auto update = [&](const std::string& txn, PaymentStatus status) {
        auto lock = db_.lock();
        auto stmt = db_.prepare("UPDATE payments SET merchant_txn_id = ?, status = ? WHERE payment_id = ?");
        stmt.bind(1, txn).bind(2, payment_status_name(status)).bind(3, payment_id);
        stmt.run();
    };

    PaymentInitiation init;
    try {
        init = gateway_.initiate(payment_id, user_id, plan, plan_amount(plan));
    } catch (const Error&) {
        update("", PaymentStatus::failed);
        throw;
    }
    auto status = PaymentStatus::pending;
    for (int i = 0; i < std::max(1, options_.payment_polls) && status == PaymentStatus::pending; ++i) {
        status = gateway_.status(init.merchant_txn_id);
    }
    if (status == PaymentStatus::confirmed && init.merchant_txn_id.empty()) status = PaymentStatus::failed;
    update(init.merchant_txn_id, status);
    if (status == PaymentStatus::failed) fail(ErrorCode::payment_failed, "payment was declined");

    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT " + std::string(kPaymentColumns) + " FROM payments WHERE payment_id = ?");
    stmt.bind(1, payment_id);
    stmt.step();
    return read_payment(stmt);
}

std::vector<PaymentRecord> CourseDirectory::payments_for(UserId id) {
    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT " + std::string(kPaymentColumns) +
                            " FROM payments WHERE user_id = ? ORDER BY payment_id");
    stmt.bind(1, id);
    std::vector<PaymentRecord> out;
    while (stmt.step()) out.push_back(read_payment(stmt));
    return out;
}

bool CourseDirectory::is_activated(UserId id) {
    auto lock = db_.lock();
    auto stmt = db_.prepare(
        "SELECT 1 FROM payments WHERE user_id = ? AND status = 'confirmed' AND length(merchant_txn_id) > 0");
    stmt.bind(1, id);
    return stmt.step();
}

SessionToken CourseDirectory::login(const std::string& username, const std::string& password) {
    std::optional<std::pair<UserId, std::string>> row;
    {
        auto lock = db_.lock();
        auto stmt = db_.prepare("SELECT user_id, password_hash FROM users WHERE username = ?");
        stmt.bind(1, username);
        if (stmt.step()) row.emplace(stmt.column_int64(0), stmt.column_text(1));
    }
    // Unknown users still pay for one verification so timing does not reveal them.
    const bool ok = verify_password(row ? row->second : dummy_hash_, password) && row.has_value();
    if (!ok) fail(ErrorCode::invalid_credentials, "invalid username or password");
    if (!is_activated(row->first)) fail(ErrorCode::payment_required, "subscription payment not confirmed");

    SessionToken session;
    session.token = text::random_hex(32);
    session.expires_at_ms = now() + options_.token_ttl_ms;
    auto lock = db_.lock();
    auto stmt = db_.prepare("INSERT INTO auth_tokens (token_hash, user_id, created_at, expires_at) VALUES (?, ?, ?, ?)");
    stmt.bind(1, text::sha256_hex(session.token)).bind(2, row->first).bind(3, now()).bind(4, session.expires_at_ms);
    stmt.run();
    return session;
}

void CourseDirectory::logout(const std::string& token) {
    auto lock = db_.lock();
    auto stmt = db_.prepare("DELETE FROM auth_tokens WHERE token_hash = ?");
    stmt.bind(1, text::sha256_hex(token));
    stmt.run();
}

UserAccount CourseDirectory::authenticate(const std::string& token) {
    if (token.empty()) fail(ErrorCode::unauthorized, "missing bearer token");
    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT u.user_id, u.username, u.email, u.role, u.created_at, t.expires_at "
                            "FROM auth_tokens t JOIN users u ON u.user_id = t.user_id WHERE t.token_hash = ?");
    stmt.bind(1, text::sha256_hex(token));
    if (!stmt.step()) fail(ErrorCode::unauthorized, "invalid or expired token");
    if (stmt.column_int64(5) <= now()) fail(ErrorCode::unauthorized, "invalid or expired token");
    return read_user(stmt);
}

std::string CourseDirectory::request_password_reset(const std::string& username) {
    auto lock = db_.lock();
    auto find = db_.prepare("SELECT user_id FROM users WHERE username = ?");
    find.bind(1, username);
    if (!find.step()) fail(ErrorCode::not_found, "no such user");
    const auto user_id = find.column_int64(0);
    const auto token = text::random_hex(32);
    auto insert = db_.prepare("INSERT INTO password_resets (token_hash, user_id, expires_at) VALUES (?, ?, ?)");
    insert.bind(1, text::sha256_hex(token)).bind(2, user_id).bind(3, now() + kResetTtlMs);
    insert.run();
    return token;
}

void CourseDirectory::reset_password(const std::string& reset_token, const std::string& new_password) {
    if (new_password.size() < kMinPasswordLength) {
        fail(ErrorCode::weak_password, "password must be at least 8 characters");
    }
    const auto hash = hash_password(new_password);
    Transaction tx(db_);
    auto find = db_.prepare("SELECT user_id, expires_at, used FROM password_resets WHERE token_hash = ?");
    find.bind(1, text::sha256_hex(reset_token));
    if (!find.step() || find.column_int64(2) != 0 || find.column_int64(1) <= now()) {
        fail(ErrorCode::unauthorized, "invalid or expired reset token");
    }
    const auto user_id = find.column_int64(0);
    auto upd = db_.prepare("UPDATE users SET password_hash = ? WHERE user_id = ?");
    upd.bind(1, hash).bind(2, user_id);
    upd.run();
    auto mark = db_.prepare("UPDATE password_resets SET used = 1 WHERE token_hash = ?");
    mark.bind(1, text::sha256_hex(reset_token));
    mark.run();
    auto revoke = db_.prepare("DELETE FROM auth_tokens WHERE user_id = ?");
    revoke.bind(1, user_id);
    revoke.run();
    tx.commit();
}

Course CourseDirectory::create_course(const UserAccount& actor, const std::string& title, Visibility visibility) {
    if (actor.role != Role::instructor) fail(ErrorCode::access_denied, "only instructors create courses");
    if (text::trim(title).empty() || !text::is_valid_utf8(title)) {
        fail(ErrorCode::invalid_argument, "course title must be non-empty UTF-8");
    }
    const auto slug = text::slug(title);
    auto lock = db_.lock();
    {
        auto check = db_.prepare("SELECT 1 FROM courses WHERE slug = ?");
        check.bind(1, slug);
        if (check.step()) fail(ErrorCode::duplicate_slug, "a course with slug '" + slug + "' already exists");
    }
    auto insert = db_.prepare(
        "INSERT INTO courses (title, slug, visibility, owner_id, created_at) VALUES (?, ?, ?, ?, ?)");
    const auto created = now();
    insert.bind(1, title).bind(2, slug).bind(3, visibility_name(visibility)).bind(4, actor.user_id).bind(5, created);
    insert.run();
    return Course{db_.last_insert_id(), title, slug, visibility, actor.user_id, created};
}

void CourseDirectory::grant_access(const UserAccount& actor, CourseId course_id, UserId user_id) {
    const auto course = require_owner(actor, course_id);
    if (!course.is_private()) fail(ErrorCode::not_private_course, "grants apply to private courses only");
    if (!find_user(user_id)) fail(ErrorCode::not_found, "no such user");
    auto lock = db_.lock();
    auto stmt = db_.prepare(
        "INSERT OR IGNORE INTO grants (course_id, user_id, granted_by, granted_at) VALUES (?, ?, ?, ?)");
    stmt.bind(1, course_id).bind(2, user_id).bind(3, actor.user_id).bind(4, now());
    stmt.run();
}

void CourseDirectory::revoke_access(const UserAccount& actor, CourseId course_id, UserId user_id) {
    const auto course = require_owner(actor, course_id);
    if (!course.is_private()) fail(ErrorCode::not_private_course, "grants apply to private courses only");
    auto lock = db_.lock();
    auto stmt = db_.prepare("DELETE FROM grants WHERE course_id = ? AND user_id = ?");
    stmt.bind(1, course_id).bind(2, user_id);
    stmt.run();
}

std::vector<AccessGrant> CourseDirectory::list_grants(const UserAccount& actor, CourseId course_id) {
    require_owner(actor, course_id);
    auto lock = db_.lock();
    auto stmt = db_.prepare(
        "SELECT course_id, user_id, granted_by, granted_at FROM grants WHERE course_id = ? ORDER BY user_id");
    stmt.bind(1, course_id);
    std::vector<AccessGrant> out;
    while (stmt.step()) {
        out.push_back({stmt.column_int64(0), stmt.column_int64(1), stmt.column_int64(2), stmt.column_int64(3)});
    }
    return out;
}

std::vector<Course> CourseDirectory::list_accessible(const UserAccount& actor) {
    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT " + std::string(kCourseColumns) +
                            " FROM courses c WHERE visibility = 'public' OR owner_id = ?1 "
                            "OR EXISTS (SELECT 1 FROM grants g WHERE g.course_id = c.course_id AND g.user_id = ?1) "
                            "ORDER BY course_id");
    stmt.bind(1, actor.user_id);
    std::vector<Course> out;
    while (stmt.step()) out.push_back(read_course(stmt));
    return out;
}

std::optional<UserAccount> CourseDirectory::find_user(UserId id) {
    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT " + std::string(kUserColumns) + " FROM users WHERE user_id = ?");
    stmt.bind(1, id);
    if (!stmt.step()) return std::nullopt;
    return read_user(stmt);
}

std::optional<Course> CourseDirectory::find_course(CourseId id) {
    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT " + std::string(kCourseColumns) + " FROM courses WHERE course_id = ?");
    stmt.bind(1, id);
    if (!stmt.step()) return std::nullopt;
    return read_course(stmt);
}

std::optional<Course> CourseDirectory::find_course_by_slug(const std::string& slug) {
    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT " + std::string(kCourseColumns) + " FROM courses WHERE slug = ?");
    stmt.bind(1, slug);
    if (!stmt.step()) return std::nullopt;
    return read_course(stmt);
}

bool CourseDirectory::can_read(const UserAccount& actor, const Course& course) {
    if (!course.is_private() || course.owner_id == actor.user_id) return true;
    auto lock = db_.lock();
    auto stmt = db_.prepare("SELECT 1 FROM grants WHERE course_id = ? AND user_id = ?");
    stmt.bind(1, course.course_id).bind(2, actor.user_id);
    return stmt.step();
}

Course CourseDirectory::require_reader(const UserAccount& actor, CourseId course_id) {
    auto course = find_course(course_id);
    if (!course) fail(ErrorCode::course_not_found, "no such course");
    if (!can_read(actor, *course)) fail(ErrorCode::access_denied, "no access to this course");
    return *course;
}

Course CourseDirectory::require_owner(const UserAccount& actor, CourseId course_id) {
    auto course = find_course(course_id);
    if (!course) fail(ErrorCode::course_not_found, "no such course");
    if (course->owner_id != actor.user_id) fail(ErrorCode::access_denied, "only the course owner may do this");
    return *course;
}

}  // namespace coursekb::courses
