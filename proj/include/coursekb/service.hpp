// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/analytics.hpp"
#include "coursekb/chat.hpp"
#include "coursekb/chunker.hpp"
#include "coursekb/config.hpp"
#include "coursekb/courses.hpp"
#include "coursekb/db.hpp"
#include "coursekb/embedding.hpp"
#include "coursekb/ingest.hpp"
#include "coursekb/llm.hpp"
#include "coursekb/object_store.hpp"
#include "coursekb/registry.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace coursekb {

struct IngestResult {
    std::string doc_id;
    std::size_t new_chunks = 0;
    std::uint64_t manifest_version = 0;
};

struct DocumentInfo {
    std::string doc_id;
    courses::CourseId course_id = 0;
    std::string title;
    ingest::Origin origin = ingest::Origin::upload;
    std::string origin_ref;
    bool body_dropped = false;
    std::int64_t ingested_at_ms = 0;
};

/// ingest -> chunk -> embed -> index -> persist. Staging records the document
/// and its raw object; build() folds it into the course index and removes the
/// raw object once the new manifest is durable.
class IngestPipeline {
public:
    IngestPipeline(Database& db, ObjectStore& store, IndexRegistry& registry, EmbeddingProvider& embedder,
                   ChunkingOptions chunking);

    ingest::SourceDocument stage_upload(const courses::Course& course, const std::string& filename,
                                        std::string_view bytes, ingest::UploadFormat format);
    ingest::SourceDocument stage_transcript(const courses::Course& course, const std::string& url,
                                            const std::vector<std::string>& preferred_langs,
                                            ingest::TranscriptProvider& provider);
    IngestResult build(const courses::Course& course, const std::string& doc_id);

    std::vector<DocumentInfo> documents(courses::CourseId course_id);

private:
    ingest::SourceDocument stage(const courses::Course& course, ingest::SourceDocument doc,
                                 const std::string& filename, std::string_view raw_bytes);
    std::mutex& course_lock(courses::CourseId course_id);

    Database& db_;
    ObjectStore& store_;
    IndexRegistry& registry_;
    EmbeddingProvider& embedder_;
    ChunkingOptions chunking_;
    std::mutex locks_mu_;
    std::map<courses::CourseId, std::unique_ptr<std::mutex>> locks_;
};

enum class JobStatus { queued, building, done, failed };
std::string_view job_status_name(JobStatus s) noexcept;

struct JobInfo {
    std::string job_id;
    courses::CourseId course_id = 0;
    std::string kind;
    std::string doc_id;
    JobStatus status = JobStatus::queued;
    std::optional<std::string> error;
    std::optional<std::uint64_t> manifest_version;
    std::int64_t created_at_ms = 0;
    std::int64_t updated_at_ms = 0;
};

/// Background index builds. Jobs of one course run strictly one at a time in
/// submission order; different courses proceed in parallel across workers.
class JobQueue {
public:
    /// Returns the manifest version the job produced.
    using Work = std::function<std::uint64_t()>;

    JobQueue(Database& db, std::size_t workers);
    ~JobQueue();
    JobQueue(const JobQueue&) = delete;
    JobQueue& operator=(const JobQueue&) = delete;

    std::string submit(courses::CourseId course_id, const std::string& kind, const std::string& doc_id, Work work);
    std::optional<JobInfo> find(const std::string& job_id);
    /// Blocks until no job is queued or running.
    void wait_idle();

private:
    struct Pending {
        std::string job_id;
        courses::CourseId course_id;
        Work work;
    };
    void worker_loop();
    void set_status(const std::string& job_id, JobStatus status, const std::optional<std::string>& error,
                    std::optional<std::uint64_t> version);

    Database& db_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<Pending> pending_;
    std::set<courses::CourseId> active_;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

/// Replaceable collaborators; anything left null is built from the Config.
struct PlatformDeps {
    std::unique_ptr<ObjectStore> store;
    std::unique_ptr<EmbeddingProvider> embedder;
    std::unique_ptr<LlmClient> llm;
    std::unique_ptr<ingest::TranscriptProvider> transcripts;
    std::unique_ptr<courses::PaymentGateway> gateway;
    std::optional<courses::DirectoryOptions> directory;
    /// Delivers password-reset tokens (email transport is not built in).
    std::function<void(const std::string& username, const std::string& reset_token)> reset_notifier;
};

/// Every service of one deployment, wired from configuration.
class Platform {
public:
    explicit Platform(Config config, PlatformDeps deps = {});
    ~Platform();

    const Config& config() const noexcept { return config_; }
    Database& db() noexcept { return *db_; }
    ObjectStore& store() noexcept { return *store_; }
    EmbeddingProvider& embedder() noexcept { return *embedder_; }
    LlmClient* llm() noexcept { return llm_.get(); }
    ingest::TranscriptProvider& transcripts() noexcept { return *transcripts_; }
    courses::PaymentGateway& gateway() noexcept { return *gateway_; }
    courses::CourseDirectory& directory() noexcept { return *directory_; }
    IndexRegistry& registry() noexcept { return *registry_; }
    IngestPipeline& pipeline() noexcept { return *pipeline_; }
    chat::ChatService& chat() noexcept { return *chat_; }
    analytics::AnalyticsService& analytics() noexcept { return *analytics_; }
    JobQueue& jobs() noexcept { return *jobs_; }

    /// Stages an upload and queues its index build; returns (job_id, doc_id).
    std::pair<std::string, std::string> submit_upload(const courses::Course& course, const std::string& filename,
                                                      std::string_view bytes, ingest::UploadFormat format);
    std::pair<std::string, std::string> submit_transcript(const courses::Course& course, const std::string& url,
                                                          const std::vector<std::string>& preferred_langs);

    void notify_password_reset(const std::string& username, const std::string& reset_token);

    /// Test hook run inside each build job before the index is touched.
    void set_build_hook(std::function<void(courses::CourseId)> hook);

private:
    std::pair<std::string, std::string> submit_build(const courses::Course& course, const std::string& doc_id,
                                                     const std::string& kind);

    Config config_;
    std::unique_ptr<Database> db_;
    std::unique_ptr<ObjectStore> store_;
    std::unique_ptr<EmbeddingProvider> embedder_;
    std::unique_ptr<LlmClient> llm_;
    std::unique_ptr<LlmClient> keyword_llm_;
    std::unique_ptr<ingest::TranscriptProvider> transcripts_;
    std::unique_ptr<courses::PaymentGateway> gateway_;
    std::unique_ptr<courses::CourseDirectory> directory_;
    std::unique_ptr<IndexRegistry> registry_;
    std::unique_ptr<IngestPipeline> pipeline_;
    std::unique_ptr<chat::ChatService> chat_;
    std::unique_ptr<analytics::AnalyticsService> analytics_;
    std::mutex hook_mu_;
    std::function<void(courses::CourseId)> build_hook_;
    std::function<void(const std::string&, const std::string&)> reset_notifier_;
    std::unique_ptr<JobQueue> jobs_;  // last: workers stop before the services go away
};

}  // namespace coursekb
