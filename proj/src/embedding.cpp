// SPDX-License-Identifier: Apache-2.0
#include "coursekb/embedding.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"
#include "http_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace coursekb {

std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        fail(ErrorCode::dimension_mismatch,
             "cosine over vectors of " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " dims");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine_similarity(std::span<const float>(a.values), std::span<const float>(b.values));
}

LocalHashEmbedder::LocalHashEmbedder(std::size_t dims) : dims_(dims) {
    if (dims_ == 0) fail(ErrorCode::invalid_argument, "embedding dims must be positive");
}

EmbeddingVector LocalHashEmbedder::embed(std::string_view input) {
    if (input.empty()) fail(ErrorCode::empty_input, "cannot embed empty text");
    std::vector<double> acc(dims_, 0.0);
    for (const auto& token : text::word_tokens(input)) {
        acc[fnv1a64(token) % dims_] += 1.0;
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);

    EmbeddingVector out;
    out.values.resize(dims_, 0.0f);
    if (norm > 0.0) {
        for (std::size_t i = 0; i < dims_; ++i) out.values[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::string model, std::size_t dims, std::string api_key)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), dims_(dims), api_key_(std::move(api_key)) {}

EmbeddingVector RemoteEmbedder::embed(std::string_view input) {
    if (input.empty()) fail(ErrorCode::empty_input, "cannot embed empty text");
    const auto url = detail::split_url(endpoint_);
    if (url.origin.empty()) fail(ErrorCode::provider_unreachable, "embedding endpoint is not an http URL");

    auto client = detail::make_client(url.origin);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const nlohmann::json body = {{"model", model_}, {"input", std::string(input)}};
    auto res = client->Post(url.path, headers, body.dump(), "application/json");
    if (!res || res->status != 200) fail(ErrorCode::provider_unreachable, "embedding provider unreachable");

    EmbeddingVector out;
    try {
        out.values = nlohmann::json::parse(res->body).at("embedding").get<std::vector<float>>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::provider_unreachable, "embedding provider sent a malformed response");
    }
    if (out.values.size() != dims_) {
        fail(ErrorCode::dimension_mismatch, "embedding provider returned " + std::to_string(out.values.size()) +
                                                " dims, expected " + std::to_string(dims_));
    }
    for (float v : out.values) {
        if (!std::isfinite(v)) fail(ErrorCode::provider_unreachable, "embedding provider returned non-finite values");
    }
    return out;
}

}  // namespace coursekb
