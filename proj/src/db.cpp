// SPDX-License-Identifier: Apache-2.0
#include "coursekb/db.hpp"

#include "coursekb/error.hpp"

#include <sqlite3.h>

namespace coursekb {

namespace {

constexpr std::string_view kSchema = R"sql(
CREATE TABLE IF NOT EXISTS users (
    user_id       INTEGER PRIMARY KEY AUTOINCREMENT,
    username      TEXT NOT NULL UNIQUE,
    email         TEXT NOT NULL,
    password_hash TEXT NOT NULL,
    role          TEXT NOT NULL CHECK (role IN ('instructor', 'learner')),
    created_at    INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS payments (
    payment_id      INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id         INTEGER NOT NULL REFERENCES users(user_id) ON DELETE CASCADE,
    plan            TEXT NOT NULL CHECK (plan IN ('learner_basic', 'instructor_basic')),
    amount          INTEGER NOT NULL,
    merchant_txn_id TEXT,
    status          TEXT NOT NULL CHECK (status IN ('pending', 'confirmed', 'failed')),
    created_at      INTEGER NOT NULL,
    CHECK (status <> 'confirmed' OR length(merchant_txn_id) > 0)
);
CREATE TABLE IF NOT EXISTS auth_tokens (
    token_hash TEXT PRIMARY KEY,
    user_id    INTEGER NOT NULL REFERENCES users(user_id) ON DELETE CASCADE,
    created_at INTEGER NOT NULL,
    expires_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS password_resets (
    token_hash TEXT PRIMARY KEY,
    user_id    INTEGER NOT NULL REFERENCES users(user_id) ON DELETE CASCADE,
    expires_at INTEGER NOT NULL,
    used       INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS courses (
    course_id  INTEGER PRIMARY KEY AUTOINCREMENT,
    title      TEXT NOT NULL,
    slug       TEXT NOT NULL UNIQUE,
    visibility TEXT NOT NULL CHECK (visibility IN ('public', 'private')),
    owner_id   INTEGER NOT NULL REFERENCES users(user_id),
    created_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS grants (
    course_id  INTEGER NOT NULL REFERENCES courses(course_id) ON DELETE CASCADE,
    user_id    INTEGER NOT NULL REFERENCES users(user_id) ON DELETE CASCADE,
    granted_by INTEGER NOT NULL REFERENCES users(user_id),
    granted_at INTEGER NOT NULL,
    PRIMARY KEY (course_id, user_id)
);
CREATE TABLE IF NOT EXISTS documents (
    doc_id       TEXT PRIMARY KEY,
    course_id    INTEGER NOT NULL REFERENCES courses(course_id) ON DELETE CASCADE,
    title        TEXT NOT NULL,
    origin       TEXT NOT NULL CHECK (origin IN ('upload', 'youtube')),
    origin_ref   TEXT NOT NULL,
    body         TEXT,
    body_dropped INTEGER NOT NULL DEFAULT 0,
    ingested_at  INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS chunks_meta (
    course_id  INTEGER NOT NULL REFERENCES courses(course_id) ON DELETE CASCADE,
    chunk_id   INTEGER NOT NULL,
    doc_id     TEXT NOT NULL,
    ordinal    INTEGER NOT NULL,
    word_count INTEGER NOT NULL,
    PRIMARY KEY (course_id, chunk_id)
);
CREATE TABLE IF NOT EXISTS chat_turns (
    turn_id           INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id           INTEGER NOT NULL REFERENCES users(user_id),
    course_id         INTEGER NOT NULL REFERENCES courses(course_id) ON DELETE CASCADE,
    mode              TEXT NOT NULL,
    question          TEXT NOT NULL,
    context_chunk_ids TEXT NOT NULL,
    rendered_prompt   TEXT NOT NULL,
    answer            TEXT NOT NULL,
    model_id          TEXT NOT NULL,
    error             TEXT,
    created_at        INTEGER NOT NULL,
    latency_ms        INTEGER NOT NULL CHECK (latency_ms >= 0)
);
CREATE TABLE IF NOT EXISTS quizzes (
    quiz_id      INTEGER PRIMARY KEY AUTOINCREMENT,
    course_id    INTEGER NOT NULL REFERENCES courses(course_id) ON DELETE CASCADE,
    module_label TEXT NOT NULL CHECK (length(module_label) > 0),
    source       TEXT NOT NULL,
    created_at   INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS quiz_questions (
    quiz_id       INTEGER NOT NULL REFERENCES quizzes(quiz_id) ON DELETE CASCADE,
    position      INTEGER NOT NULL,
    question_text TEXT NOT NULL,
    options       TEXT NOT NULL,
    correct_index INTEGER NOT NULL CHECK (correct_index BETWEEN 0 AND 3),
    PRIMARY KEY (quiz_id, position)
);
CREATE TABLE IF NOT EXISTS quiz_attempts (
    attempt_id   INTEGER PRIMARY KEY AUTOINCREMENT,
    quiz_id      INTEGER NOT NULL REFERENCES quizzes(quiz_id) ON DELETE CASCADE,
    user_id      INTEGER NOT NULL REFERENCES users(user_id),
    answers      TEXT NOT NULL,
    correct      INTEGER NOT NULL,
    total        INTEGER NOT NULL,
    completed_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id    INTEGER NOT NULL REFERENCES users(user_id),
    course_id  INTEGER NOT NULL REFERENCES courses(course_id) ON DELETE CASCADE,
    started_at INTEGER NOT NULL,
    ended_at   INTEGER,
    CHECK (ended_at IS NULL OR ended_at >= started_at)
);
CREATE TABLE IF NOT EXISTS jobs (
    job_id           TEXT PRIMARY KEY,
    course_id        INTEGER NOT NULL REFERENCES courses(course_id) ON DELETE CASCADE,
    kind             TEXT NOT NULL,
    doc_id           TEXT,
    status           TEXT NOT NULL CHECK (status IN ('queued', 'building', 'done', 'failed')),
    error            TEXT,
    manifest_version INTEGER,
    created_at       INTEGER NOT NULL,
    updated_at       INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS chat_turns_by_course ON chat_turns(course_id, created_at);
CREATE INDEX IF NOT EXISTS attempts_by_quiz ON quiz_attempts(quiz_id, user_id);
CREATE INDEX IF NOT EXISTS sessions_by_course ON sessions(course_id);
)sql";

[[noreturn]] void sqlite_fail(sqlite3* db, const std::string& what) {
    const int code = db ? sqlite3_extended_errcode(db) : SQLITE_ERROR;
    const std::string msg = what + ": " + (db ? sqlite3_errmsg(db) : "sqlite error");
    if (code == SQLITE_CONSTRAINT_UNIQUE || code == SQLITE_CONSTRAINT_PRIMARYKEY) {
        fail(ErrorCode::invalid_argument, msg);
    }
    fail(ErrorCode::internal, msg);
}

}  // namespace

Database::Database(const std::string& path) {
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
    if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        fail(ErrorCode::internal, "cannot open database " + path + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec("PRAGMA foreign_keys = ON");
    if (path != ":memory:") exec("PRAGMA journal_mode = WAL");
    migrate();
}

Database::~Database() { sqlite3_close(db_); }

void Database::migrate() { exec(kSchema); }

void Database::exec(std::string_view sql) {
    std::lock_guard lock(mu_);
    char* err = nullptr;
    const std::string owned(sql);
    if (sqlite3_exec(db_, owned.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        fail(ErrorCode::internal, "sql exec failed: " + msg);
    }
}

Statement Database::prepare(std::string_view sql) {
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &stmt, nullptr) != SQLITE_OK) {
        sqlite_fail(db_, "prepare failed");
    }
    return Statement(*this, stmt);
}

std::int64_t Database::last_insert_id() const { return sqlite3_last_insert_rowid(db_); }
int Database::changes() const { return sqlite3_changes(db_); }

Statement::Statement(Statement&& other) noexcept : db_(other.db_), stmt_(other.stmt_) { other.stmt_ = nullptr; }

Statement::~Statement() { sqlite3_finalize(stmt_); }

Statement& Statement::bind(int index, std::int64_t value) {
    if (sqlite3_bind_int64(stmt_, index, value) != SQLITE_OK) sqlite_fail(db_->db_, "bind failed");
    return *this;
}

Statement& Statement::bind(int index, double value) {
    if (sqlite3_bind_double(stmt_, index, value) != SQLITE_OK) sqlite_fail(db_->db_, "bind failed");
    return *this;
}

Statement& Statement::bind(int index, std::string_view value) {
    if (sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()), SQLITE_TRANSIENT) !=
        SQLITE_OK) {
        sqlite_fail(db_->db_, "bind failed");
    }
    return *this;
}

Statement& Statement::bind_null(int index) {
    if (sqlite3_bind_null(stmt_, index) != SQLITE_OK) sqlite_fail(db_->db_, "bind failed");
    return *this;
}

bool Statement::step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    sqlite_fail(db_->db_, "step failed");
}

void Statement::run() {
    while (step()) {
    }
}

void Statement::reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
}

std::int64_t Statement::column_int64(int index) const { return sqlite3_column_int64(stmt_, index); }
double Statement::column_double(int index) const { return sqlite3_column_double(stmt_, index); }

std::string Statement::column_text(int index) const {
    const auto* p = sqlite3_column_text(stmt_, index);
    const int n = sqlite3_column_bytes(stmt_, index);
    return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(n)) : std::string();
}

bool Statement::column_is_null(int index) const { return sqlite3_column_type(stmt_, index) == SQLITE_NULL; }

Transaction::Transaction(Database& db) : db_(db), lock_(db.lock()) { db_.exec("BEGIN IMMEDIATE"); }

Transaction::~Transaction() {
    if (!done_) {
        try {
            db_.exec("ROLLBACK");
        } catch (...) {
        }
    }
}

void Transaction::commit() {
    db_.exec("COMMIT");
    done_ = true;
}

}  // namespace coursekb
