// SPDX-License-Identifier: Apache-2.0
#include "coursekb/rouge.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"

#include <algorithm>
#include <map>

namespace coursekb::rouge {

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

void require_text(const std::vector<std::string>& tokens, std::string_view which) {
    if (tokens.empty()) fail(ErrorCode::empty_input, std::string(which) + " text is empty");
}

}  // namespace

std::vector<std::string> tokenize(std::string_view input) {
    auto tokens = text::split_whitespace(input);
    for (auto& t : tokens) t = text::to_lower_ascii(t);
    return tokens;
}

double f_measure(double precision, double recall) noexcept {
    const double sum = precision + recall;
    return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n) {
    if (n != 1 && n != 2) fail(ErrorCode::invalid_argument, "rouge_n supports n = 1 or 2");
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    require_text(cand, "candidate");
    require_text(ref, "reference");

    const auto cand_counts = ngram_counts(cand, static_cast<std::size_t>(n));
    const auto ref_counts = ngram_counts(ref, static_cast<std::size_t>(n));
    std::size_t overlap = 0;
    std::size_t cand_total = 0;
    std::size_t ref_total = 0;
    for (const auto& [gram, count] : cand_counts) {
        cand_total += count;
        if (auto it = ref_counts.find(gram); it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    for (const auto& [gram, count] : ref_counts) ref_total += count;

    RougeScore s;
    s.precision = ratio(overlap, cand_total);
    s.recall = ratio(overlap, ref_total);
    s.f1 = f_measure(s.precision, s.recall);
    return s;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    // Two-row DP over b.
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    require_text(cand, "candidate");
    require_text(ref, "reference");
    const auto lcs = lcs_length(cand, ref);
    RougeScore s;
    s.precision = ratio(lcs, cand.size());
    s.recall = ratio(lcs, ref.size());
    s.f1 = f_measure(s.precision, s.recall);
    return s;
}

}  // namespace coursekb::rouge
