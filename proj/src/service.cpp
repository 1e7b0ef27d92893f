// SPDX-License-Identifier: Apache-2.0
#include "coursekb/service.hpp"

#include "coursekb/error.hpp"
#include "coursekb/index.hpp"
#include "coursekb/text.hpp"

#include <sodium.h>

#include <algorithm>

namespace coursekb {

namespace {

// Keeps object keys and filesystem paths tame whatever the client sent.
std::string safe_filename(std::string_view name) {
    if (auto slash = name.find_last_of("/\\"); slash != std::string_view::npos) name.remove_prefix(slash + 1);
    std::string out;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                        c == '-' || c == '_';
        out.push_back(ok ? c : '_');
    }
    if (out.empty() || out.front() == '.') out = "upload" + out;
    return out;
}

std::unique_ptr<ObjectStore> store_from(const Config& c) {
    if (!c.object_store_url.empty()) return std::make_unique<HttpObjectStore>(c.object_store_url, c.object_store_token);
    return std::make_unique<FsObjectStore>(c.object_store_root);
}

std::unique_ptr<EmbeddingProvider> embedder_from(const Config& c) {
    if (c.embed_provider == "remote") {
        if (c.embed_endpoint.empty()) fail(ErrorCode::invalid_argument, "EMBED_ENDPOINT is required for remote embeddings");
        return std::make_unique<RemoteEmbedder>(c.embed_endpoint, c.embed_model, c.embed_dims, c.llm_api_key);
    }
    return std::make_unique<LocalHashEmbedder>(c.embed_dims);
}

std::unique_ptr<ingest::TranscriptProvider> transcripts_from(const Config& c) {
    if (!c.transcript_endpoint.empty()) return std::make_unique<ingest::HttpTranscriptProvider>(c.transcript_endpoint);
    return std::make_unique<ingest::FixtureTranscriptProvider>(c.transcript_fixtures);
}

courses::DirectoryOptions directory_options_from(const Config& c) {
    courses::DirectoryOptions o;
    if (c.password_hash_cost == "min") {
        o.pwhash_opslimit = crypto_pwhash_OPSLIMIT_MIN;
        o.pwhash_memlimit = crypto_pwhash_MEMLIMIT_MIN;
    } else if (c.password_hash_cost != "interactive") {
        fail(ErrorCode::invalid_argument, "password_hash_cost must be 'interactive' or 'min'");
    }
    return o;
}

}  // namespace

// ---- IngestPipeline ---------------------------------------------------------

IngestPipeline::IngestPipeline(Database& db, ObjectStore& store, IndexRegistry& registry, EmbeddingProvider& embedder,
                               ChunkingOptions chunking)
    : db_(db), store_(store), registry_(registry), embedder_(embedder), chunking_(chunking) {
    if (chunking_.max_chunk_words == 0 || chunking_.overlap_words >= chunking_.max_chunk_words) {
        fail(ErrorCode::invalid_argument, "overlap_words must be smaller than max_chunk_words");
    }
}

std::mutex& IngestPipeline::course_lock(courses::CourseId course_id) {
    std::lock_guard lk(locks_mu_);
    auto& slot = locks_[course_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

ingest::SourceDocument IngestPipeline::stage(const courses::Course& course, ingest::SourceDocument doc,
                                             const std::string& filename, std::string_view raw_bytes) {
    doc.doc_id = "doc-" + text::random_hex(8);
    doc.course_id = std::to_string(course.course_id);
    doc.ingested_at_ms = text::now_ms();

    try {
        store_.put(raw_key(course.slug, doc.doc_id, safe_filename(filename)), raw_bytes);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::invalid_argument) throw;
        fail(ErrorCode::store_unavailable, std::string("raw upload not stored: ") + e.what());
    }
    auto stmt = db_.prepare(
        "INSERT INTO documents (doc_id, course_id, title, origin, origin_ref, body, ingested_at) "
        "VALUES (?, ?, ?, ?, ?, ?, ?)");
    stmt.bind(1, doc.doc_id)
        .bind(2, course.course_id)
        .bind(3, doc.title)
        .bind(4, ingest::origin_name(doc.origin))
        .bind(5, doc.origin_ref)
        .bind(6, doc.body)
        .bind(7, doc.ingested_at_ms)
        .run();
    return doc;
}

ingest::SourceDocument IngestPipeline::stage_upload(const courses::Course& course, const std::string& filename,
                                                    std::string_view bytes, ingest::UploadFormat format) {
    ingest::SourceDocument doc;
    doc.origin = ingest::Origin::upload;
    doc.title = filename.empty() ? std::string("untitled") : filename;
    doc.origin_ref = filename;
    doc.body = ingest::parse_upload(bytes, format);
    return stage(course, std::move(doc), filename, bytes);
}

ingest::SourceDocument IngestPipeline::stage_transcript(const courses::Course& course, const std::string& url,
                                                        const std::vector<std::string>& preferred_langs,
                                                        ingest::TranscriptProvider& provider) {
    const auto video_id = ingest::parse_video_id(url);
    const auto transcript = provider.fetch(video_id, preferred_langs);
    ingest::SourceDocument doc;
    doc.origin = ingest::Origin::youtube;
    doc.title = transcript.video_title.empty() ? video_id : transcript.video_title;
    doc.origin_ref = url;
    doc.body = ingest::clean_transcript(transcript.entries, transcript.video_title);
    const std::string body = doc.body;
    return stage(course, std::move(doc), video_id + ".txt", body);
}

IngestResult IngestPipeline::build(const courses::Course& course, const std::string& doc_id) {
    std::lock_guard course_guard(course_lock(course.course_id));

    std::string body;
    {
        auto stmt = db_.prepare("SELECT body FROM documents WHERE doc_id = ? AND course_id = ?");
        stmt.bind(1, doc_id).bind(2, course.course_id);
        if (!stmt.step()) fail(ErrorCode::not_found, "document " + doc_id + " not found");
        if (stmt.column_is_null(0)) fail(ErrorCode::invalid_argument, "document " + doc_id + " is already indexed");
        body = stmt.column_text(0);
    }

    const auto prior = registry_.find(course.slug);
    std::vector<Chunk> chunks = prior ? prior->chunks : std::vector<Chunk>{};
    std::vector<EmbeddingVector> embeddings = prior ? prior->embeddings() : std::vector<EmbeddingVector>{};
    const auto fresh = chunk_text(body, doc_id, chunking_, static_cast<ChunkId>(chunks.size()));
    for (const auto& c : fresh) {
        embeddings.push_back(embedder_.embed(c.text));
        chunks.push_back(c);
    }

    auto index = build_index(std::to_string(course.course_id), std::move(chunks), embeddings,
                             prior ? prior->manifest_version : 0);
    const auto persisted = persist_index(index, course.slug, store_);
    index.manifest_version = persisted.manifest_version;
    auto snapshot = std::make_shared<const CourseIndex>(std::move(index));
    registry_.publish(course.slug, snapshot);

    {
        Transaction tx(db_);
        auto insert = db_.prepare(
            "INSERT OR REPLACE INTO chunks_meta (course_id, chunk_id, doc_id, ordinal, word_count) VALUES (?, ?, ?, ?, ?)");
        for (const auto& c : snapshot->chunks) {
            if (c.doc_id != doc_id) continue;
            insert.bind(1, course.course_id)
                .bind(2, static_cast<std::int64_t>(c.chunk_id))
                .bind(3, c.doc_id)
                .bind(4, static_cast<std::int64_t>(c.ordinal))
                .bind(5, static_cast<std::int64_t>(c.word_count))
                .run();
            insert.reset();
        }
        tx.commit();
    }

    finalize_upload(doc_id, course.slug, store_);
    db_.prepare("UPDATE documents SET body = NULL, body_dropped = 1 WHERE doc_id = ?").bind(1, doc_id).run();

    return {doc_id, fresh.size(), snapshot->manifest_version};
}

std::vector<DocumentInfo> IngestPipeline::documents(courses::CourseId course_id) {
    auto stmt = db_.prepare(
        "SELECT doc_id, title, origin, origin_ref, body_dropped, ingested_at FROM documents "
        "WHERE course_id = ? ORDER BY ingested_at, doc_id");
    stmt.bind(1, course_id);
    std::vector<DocumentInfo> out;
    while (stmt.step()) {
        DocumentInfo d;
        d.doc_id = stmt.column_text(0);
        d.course_id = course_id;
        d.title = stmt.column_text(1);
        d.origin = stmt.column_text(2) == "youtube" ? ingest::Origin::youtube : ingest::Origin::upload;
        d.origin_ref = stmt.column_text(3);
        d.body_dropped = stmt.column_int64(4) != 0;
        d.ingested_at_ms = stmt.column_int64(5);
        out.push_back(std::move(d));
    }
    return out;
}

// ---- JobQueue ---------------------------------------------------------------

std::string_view job_status_name(JobStatus s) noexcept {
    switch (s) {
        case JobStatus::queued: return "queued";
        case JobStatus::building: return "building";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "failed";
}

JobQueue::JobQueue(Database& db, std::size_t workers) : db_(db) {
    // Jobs left over from a previous process can no longer finish.
    db_.prepare("UPDATE jobs SET status = 'failed', error = 'interrupted', updated_at = ? "
                "WHERE status IN ('queued', 'building')")
        .bind(1, text::now_ms())
        .run();
    if (workers == 0) workers = 1;
    for (std::size_t i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobQueue::~JobQueue() {
    {
        std::lock_guard lk(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
}

std::string JobQueue::submit(courses::CourseId course_id, const std::string& kind, const std::string& doc_id,
                             Work work) {
    const auto job_id = "job-" + text::random_hex(8);
    const auto now = text::now_ms();
    db_.prepare("INSERT INTO jobs (job_id, course_id, kind, doc_id, status, created_at, updated_at) "
                "VALUES (?, ?, ?, ?, 'queued', ?, ?)")
        .bind(1, job_id)
        .bind(2, course_id)
        .bind(3, kind)
        .bind(4, doc_id)
        .bind(5, now)
        .bind(6, now)
        .run();
    {
        std::lock_guard lk(mu_);
        pending_.push_back({job_id, course_id, std::move(work)});
    }
    cv_.notify_all();
    return job_id;
}

void JobQueue::set_status(const std::string& job_id, JobStatus status, const std::optional<std::string>& error,
                          std::optional<std::uint64_t> version) {
    auto stmt = db_.prepare("UPDATE jobs SET status = ?, error = ?, manifest_version = ?, updated_at = ? WHERE job_id = ?");
    stmt.bind(1, job_status_name(status)).bind(2, error);
    if (version) {
        stmt.bind(3, static_cast<std::int64_t>(*version));
    } else {
        stmt.bind_null(3);
    }
    stmt.bind(4, text::now_ms()).bind(5, job_id).run();
}

void JobQueue::worker_loop() {
    for (;;) {
        Pending job;
        {
            std::unique_lock lk(mu_);
            std::deque<Pending>::iterator it;
            cv_.wait(lk, [&] {
                if (stopping_) return true;
                // First job whose course has nothing running keeps per-course FIFO order.
                it = std::find_if(pending_.begin(), pending_.end(),
                                  [&](const Pending& p) { return active_.count(p.course_id) == 0; });
                return it != pending_.end();
            });
            if (stopping_) return;
            job = std::move(*it);
            pending_.erase(it);
            active_.insert(job.course_id);
        }

        set_status(job.job_id, JobStatus::building, std::nullopt, std::nullopt);
        try {
            const auto version = job.work();
            set_status(job.job_id, JobStatus::done, std::nullopt, version);
        } catch (const Error& e) {
            set_status(job.job_id, JobStatus::failed, std::string(code_name(e.code())), std::nullopt);
        } catch (const std::exception&) {
            set_status(job.job_id, JobStatus::failed, std::string("internal"), std::nullopt);
        }

        {
            std::lock_guard lk(mu_);
            active_.erase(job.course_id);
        }
        cv_.notify_all();
        idle_cv_.notify_all();
    }
}

std::optional<JobInfo> JobQueue::find(const std::string& job_id) {
    auto stmt = db_.prepare(
        "SELECT course_id, kind, doc_id, status, error, manifest_version, created_at, updated_at "
        "FROM jobs WHERE job_id = ?");
    stmt.bind(1, job_id);
    if (!stmt.step()) return std::nullopt;
    JobInfo j;
    j.job_id = job_id;
    j.course_id = stmt.column_int64(0);
    j.kind = stmt.column_text(1);
    j.doc_id = stmt.column_is_null(2) ? std::string() : stmt.column_text(2);
    const auto status = stmt.column_text(3);
    j.status = status == "queued"     ? JobStatus::queued
               : status == "building" ? JobStatus::building
               : status == "done"     ? JobStatus::done
                                      : JobStatus::failed;
    if (!stmt.column_is_null(4)) j.error = stmt.column_text(4);
    if (!stmt.column_is_null(5)) j.manifest_version = static_cast<std::uint64_t>(stmt.column_int64(5));
    j.created_at_ms = stmt.column_int64(6);
    j.updated_at_ms = stmt.column_int64(7);
    return j;
}

void JobQueue::wait_idle() {
    std::unique_lock lk(mu_);
    idle_cv_.wait(lk, [&] { return pending_.empty() && active_.empty(); });
}

// ---- Platform ---------------------------------------------------------------

Platform::Platform(Config config, PlatformDeps deps) : config_(std::move(config)) {
    if (sodium_init() < 0) fail(ErrorCode::internal, "libsodium failed to initialise");

    db_ = std::make_unique<Database>(config_.db_path);
    store_ = deps.store ? std::move(deps.store) : store_from(config_);
    embedder_ = deps.embedder ? std::move(deps.embedder) : embedder_from(config_);
    if (deps.llm) {
        llm_ = std::move(deps.llm);
    } else if (!config_.llm_endpoint.empty()) {
        llm_ = std::make_unique<HttpLlmClient>(config_.llm_endpoint, config_.llm_model, config_.llm_api_key);
    }
    if (config_.llm_keywords && !config_.llm_endpoint.empty()) {
        keyword_llm_ = std::make_unique<HttpLlmClient>(config_.llm_endpoint, config_.llm_model, config_.llm_api_key);
    }
    transcripts_ = deps.transcripts ? std::move(deps.transcripts) : transcripts_from(config_);
    reset_notifier_ = std::move(deps.reset_notifier);
    gateway_ = deps.gateway ? std::move(deps.gateway) : std::make_unique<courses::StubPaymentGateway>();

    directory_ = std::make_unique<courses::CourseDirectory>(
        *db_, *gateway_, deps.directory ? *deps.directory : directory_options_from(config_));
    registry_ = std::make_unique<IndexRegistry>(*store_);
    pipeline_ = std::make_unique<IngestPipeline>(*db_, *store_, *registry_, *embedder_,
                                                 ChunkingOptions{config_.max_chunk_words, config_.overlap_words});

    chat::ChatOptions chat_options;
    chat_options.retrieval = config_.retrieval;
    chat_options.course_bm25 = config_.course_bm25;
    chat_ = std::make_unique<chat::ChatService>(*db_, *directory_, *registry_, *embedder_, llm_.get(), chat_options,
                                                keyword_llm_.get());
    analytics_ = std::make_unique<analytics::AnalyticsService>(*db_, *directory_);
    jobs_ = std::make_unique<JobQueue>(*db_, config_.job_workers);
}

Platform::~Platform() { jobs_.reset(); }

void Platform::notify_password_reset(const std::string& username, const std::string& reset_token) {
    if (reset_notifier_) reset_notifier_(username, reset_token);
}

void Platform::set_build_hook(std::function<void(courses::CourseId)> hook) {
    std::lock_guard lk(hook_mu_);
    build_hook_ = std::move(hook);
}

std::pair<std::string, std::string> Platform::submit_build(const courses::Course& course, const std::string& doc_id,
                                                           const std::string& kind) {
    auto job_id = jobs_->submit(course.course_id, kind, doc_id, [this, course, doc_id] {
        std::function<void(courses::CourseId)> hook;
        {
            std::lock_guard lk(hook_mu_);
            hook = build_hook_;
        }
        if (hook) hook(course.course_id);
        return pipeline_->build(course, doc_id).manifest_version;
    });
    return {job_id, doc_id};
}

std::pair<std::string, std::string> Platform::submit_upload(const courses::Course& course, const std::string& filename,
                                                            std::string_view bytes, ingest::UploadFormat format) {
    const auto doc = pipeline_->stage_upload(course, filename, bytes, format);
    return submit_build(course, doc.doc_id, "upload");
}

std::pair<std::string, std::string> Platform::submit_transcript(const courses::Course& course, const std::string& url,
                                                                const std::vector<std::string>& preferred_langs) {
    const auto doc = pipeline_->stage_transcript(course, url,
                                                 preferred_langs.empty() ? config_.transcript_langs : preferred_langs,
                                                 *transcripts_);
    return submit_build(course, doc.doc_id, "youtube");
}

}  // namespace coursekb
