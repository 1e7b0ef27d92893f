// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coursekb {

/// Dense embedding. Values are finite; norm is 1 or the vector is all-zero
/// for vectors produced by the local embedder.
struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dims() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

/// dot(a,b) / (|a||b|), or 0 when either norm is 0. Accumulates in double.
double cosine_similarity(std::span<const float> a, std::span<const float> b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);
inline double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    return 1.0 - cosine_similarity(a, b);
}

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dims() const = 0;
    /// Must be safe to call concurrently.
    virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Hashed bag-of-words: each lowercase alphanumeric token lands in bucket
/// fnv1a64(token) % dims with its term frequency, then L2-normalised.
class LocalHashEmbedder : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDims = 384;

    explicit LocalHashEmbedder(std::size_t dims = kDefaultDims);
    std::size_t dims() const override { return dims_; }
    EmbeddingVector embed(std::string_view text) override;

private:
    std::size_t dims_;
};

/// JSON over HTTP: POST {model, input} -> {embedding: [float...]}.
class RemoteEmbedder : public EmbeddingProvider {
public:
    RemoteEmbedder(std::string endpoint, std::string model, std::size_t dims, std::string api_key = {});
    std::size_t dims() const override { return dims_; }
    EmbeddingVector embed(std::string_view text) override;

private:
    std::string endpoint_;
    std::string model_;
    std::size_t dims_;
    std::string api_key_;
};

std::uint64_t fnv1a64(std::string_view s) noexcept;

}  // namespace coursekb
