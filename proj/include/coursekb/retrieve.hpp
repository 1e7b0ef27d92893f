// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/embedding.hpp"
#include "coursekb/index.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coursekb {

class LlmClient;

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

enum class FusionMethod { weighted_minmax, reciprocal_rank };

struct RetrievalOptions {
    std::size_t k = 4;
    double alpha = 0.5;  // weight of the lexical family
    Bm25Params bm25{};
    FusionMethod fusion = FusionMethod::weighted_minmax;
    double rrf_k = 60.0;
    /// Cosine candidates must score strictly above this to enter the pool.
    double min_cosine = 0.0;
};

struct Query {
    std::string raw_text;
    std::vector<std::string> keywords;
    EmbeddingVector embedding;
    /// Set when no keywords survived extraction; retrieval is vector-only.
    bool vector_only = false;
};

struct RetrievalResult {
    ChunkId chunk_id = 0;
    double bm25_score = 0.0;
    double cosine_score = 0.0;
    double fused_score = 0.0;
    std::size_t rank = 0;

    bool operator==(const RetrievalResult&) const = default;
};

/// Up to k salient terms. With an LLM client the model proposes
/// comma-separated keywords; otherwise (or on any client failure) the query's
/// non-stopword terms are ranked by IDF in the index, unknown terms first,
/// query order breaking ties.
std::vector<std::string> extract_keywords(std::string_view raw_text, const CourseIndex& index, LlmClient* llm,
                                          std::size_t k);

/// IDF-ranked fallback used by extract_keywords.
std::vector<std::string> idf_keywords(std::string_view raw_text, const CourseIndex& index, std::size_t k);

double bm25_idf(std::size_t n_chunks, std::size_t document_frequency) noexcept;

/// Okapi BM25 over distinct keywords; chunks matching nothing are omitted.
std::map<ChunkId, double> bm25_scores(std::span<const std::string> keywords, const CourseIndex& index,
                                      const Bm25Params& params = {});

/// Exact scan: top-k by cosine similarity, ties by ascending chunk id.
std::vector<std::pair<ChunkId, double>> vector_scores(const EmbeddingVector& query_embedding,
                                                      const CourseIndex& index, std::size_t k);

/// Top-k by score descending, ties by ascending chunk id.
std::vector<std::pair<ChunkId, double>> top_k(const std::map<ChunkId, double>& scores, std::size_t k);

/// Fuses the two score families over the union of their top-2k candidates.
/// Pure function of the inputs so it can be exercised on synthetic tables.
std::vector<RetrievalResult> fuse(const std::map<ChunkId, double>& bm25, const std::map<ChunkId, double>& cosine,
                                  std::size_t k, double alpha, FusionMethod method = FusionMethod::weighted_minmax,
                                  double rrf_k = 60.0);

std::vector<RetrievalResult> hybrid_retrieve(const Query& query, const CourseIndex& index,
                                             const RetrievalOptions& options = {});

/// Builds a Query: keywords via extract_keywords and the embedding via the
/// provider.
Query make_query(std::string_view raw_text, const CourseIndex& index, EmbeddingProvider& embedder, LlmClient* llm,
                 std::size_t max_keywords = 8);

}  // namespace coursekb
