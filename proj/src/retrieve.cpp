// SPDX-License-Identifier: Apache-2.0
#include "coursekb/retrieve.hpp"

#include "coursekb/error.hpp"
#include "coursekb/llm.hpp"
#include "coursekb/text.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace coursekb {

namespace {

bool by_score_then_id(const std::pair<ChunkId, double>& a, const std::pair<ChunkId, double>& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
}

std::vector<std::string> unique_terms(std::vector<std::string> terms) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& t : terms) {
        if (text::is_stopword(t)) continue;
        if (seen.insert(t).second) out.push_back(std::move(t));
    }
    return out;
}

// Splits a model reply into candidate keywords: commas, semicolons and
// newlines separate entries; each entry is tokenised like chunk text.
std::vector<std::string> parse_keyword_reply(std::string_view reply) {
    std::vector<std::string> terms;
    for (auto& tok : text::word_tokens(reply)) terms.push_back(std::move(tok));
    return unique_terms(std::move(terms));
}

double minmax(double v, double lo, double hi) { return hi == lo ? 1.0 : (v - lo) / (hi - lo); }

}  // namespace

double bm25_idf(std::size_t n_chunks, std::size_t df) noexcept {
    const double n = static_cast<double>(n_chunks);
    const double d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

std::vector<std::string> idf_keywords(std::string_view raw_text, const CourseIndex& index, std::size_t k) {
    auto terms = unique_terms(text::word_tokens(raw_text));
    const auto n = index.n_chunks();
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(terms.size());
    for (auto& t : terms) {
        const double idf = bm25_idf(n, index.document_frequency(t));
        ranked.emplace_back(std::move(t), idf);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(std::move(ranked[i].first));
    return out;
}

std::vector<std::string> extract_keywords(std::string_view raw_text, const CourseIndex& index, LlmClient* llm,
                                          std::size_t k) {
    if (text::trim(raw_text).empty()) fail(ErrorCode::empty_query, "question is empty");
    if (k == 0) fail(ErrorCode::invalid_argument, "keyword count must be at least 1");
    if (llm != nullptr) {
        try {
            ChatRequest req;
            req.messages.push_back(
                {"system", "You extract search keywords. Reply with at most " + std::to_string(k) +
                               " comma-separated keywords and nothing else."});
            req.messages.push_back({"user", std::string(raw_text)});
            auto terms = parse_keyword_reply(llm->chat(req).content);
            if (!terms.empty()) {
                if (terms.size() > k) terms.resize(k);
                return terms;
            }
        } catch (const Error&) {
            // fall through to the deterministic path
        }
    }
    return idf_keywords(raw_text, index, k);
}

std::map<ChunkId, double> bm25_scores(std::span<const std::string> keywords, const CourseIndex& index,
                                      const Bm25Params& params) {
    std::map<ChunkId, double> scores;
    const auto n = index.n_chunks();
    if (n == 0 || index.avg_doc_length <= 0.0) return scores;
    std::set<std::string_view> distinct(keywords.begin(), keywords.end());
    for (auto term : distinct) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const double idf = bm25_idf(n, it->second.size());
        for (const auto& p : it->second) {
            const double tf = p.term_frequency;
            const double len_ratio = index.doc_lengths[p.chunk_id] / index.avg_doc_length;
            const double denom = tf + params.k1 * (1.0 - params.b + params.b * len_ratio);
            scores[p.chunk_id] += idf * tf * (params.k1 + 1.0) / denom;
        }
    }
    return scores;
}

std::vector<std::pair<ChunkId, double>> top_k(const std::map<ChunkId, double>& scores, std::size_t k) {
    std::vector<std::pair<ChunkId, double>> all(scores.begin(), scores.end());
    const auto keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), by_score_then_id);
    all.resize(keep);
    return all;
}

std::vector<std::pair<ChunkId, double>> vector_scores(const EmbeddingVector& query_embedding,
                                                      const CourseIndex& index, std::size_t k) {
    if (query_embedding.dims() != index.dims) {
        fail(ErrorCode::dimension_mismatch, "query has " + std::to_string(query_embedding.dims()) +
                                                " dims, index has " + std::to_string(index.dims));
    }
    std::map<ChunkId, double> all;
    for (std::size_t i = 0; i < index.n_chunks(); ++i) {
        const auto id = static_cast<ChunkId>(i);
        all.emplace(id, cosine_similarity(std::span<const float>(query_embedding.values), index.vector(id)));
    }
    return top_k(all, k);
}

std::vector<RetrievalResult> fuse(const std::map<ChunkId, double>& bm25, const std::map<ChunkId, double>& cosine,
                                  std::size_t k, double alpha, FusionMethod method, double rrf_k) {
    if (k == 0) fail(ErrorCode::invalid_argument, "k must be at least 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::invalid_argument, "alpha must lie in [0, 1]");

    const auto lexical = top_k(bm25, 2 * k);
    const auto semantic = top_k(cosine, 2 * k);
    std::set<ChunkId> pool;
    for (const auto& [id, _] : lexical) pool.insert(id);
    for (const auto& [id, _] : semantic) pool.insert(id);
    if (pool.empty()) return {};

    const auto score_of = [](const std::map<ChunkId, double>& m, ChunkId id) {
        auto it = m.find(id);
        return it == m.end() ? 0.0 : it->second;
    };

    std::vector<RetrievalResult> results;
    results.reserve(pool.size());
    for (auto id : pool) results.push_back({id, score_of(bm25, id), score_of(cosine, id), 0.0, 0});

    if (method == FusionMethod::weighted_minmax) {
        auto [bmin, bmax] = std::minmax_element(results.begin(), results.end(), [](const auto& a, const auto& b) {
            return a.bm25_score < b.bm25_score;
        });
        auto [cmin, cmax] = std::minmax_element(results.begin(), results.end(), [](const auto& a, const auto& b) {
            return a.cosine_score < b.cosine_score;
        });
        const double b_lo = bmin->bm25_score, b_hi = bmax->bm25_score;
        const double c_lo = cmin->cosine_score, c_hi = cmax->cosine_score;
        for (auto& r : results) {
            r.fused_score = alpha * minmax(r.bm25_score, b_lo, b_hi) + (1.0 - alpha) * minmax(r.cosine_score, c_lo, c_hi);
            r.fused_score = std::clamp(r.fused_score, 0.0, 1.0);
        }
    } else {
        const auto rank_in = [](const std::vector<std::pair<ChunkId, double>>& list, ChunkId id) -> std::size_t {
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (list[i].first == id) return i + 1;
            }
            return 0;
        };
        for (auto& r : results) {
            double s = 0.0;
            if (auto rb = rank_in(lexical, r.chunk_id)) s += alpha / (rrf_k + static_cast<double>(rb));
            if (auto rc = rank_in(semantic, r.chunk_id)) s += (1.0 - alpha) / (rrf_k + static_cast<double>(rc));
            r.fused_score = std::clamp(s * (rrf_k + 1.0), 0.0, 1.0);
        }
    }

    std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
        if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
        return a.chunk_id < b.chunk_id;
    });
    if (results.size() > k) results.resize(k);
    for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = i + 1;
    return results;
}

std::vector<RetrievalResult> hybrid_retrieve(const Query& query, const CourseIndex& index,
                                             const RetrievalOptions& options) {
    if (index.n_chunks() == 0) fail(ErrorCode::empty_index, "index has no chunks");
    if (options.k == 0) fail(ErrorCode::invalid_argument, "k must be at least 1");

    const auto lexical = bm25_scores(query.keywords, index, options.bm25);
    std::map<ChunkId, double> semantic;
    for (const auto& [id, score] : vector_scores(query.embedding, index, index.n_chunks())) {
        if (score > options.min_cosine) semantic.emplace(id, score);
    }
    return fuse(lexical, semantic, options.k, options.alpha, options.fusion, options.rrf_k);
}

Query make_query(std::string_view raw_text, const CourseIndex& index, EmbeddingProvider& embedder, LlmClient* llm,
                 std::size_t max_keywords) {
    Query q;
    q.raw_text = std::string(raw_text);
    q.keywords = extract_keywords(raw_text, index, llm, max_keywords);
    q.vector_only = q.keywords.empty();
    q.embedding = embedder.embed(raw_text);
    return q;
}

}  // namespace coursekb
