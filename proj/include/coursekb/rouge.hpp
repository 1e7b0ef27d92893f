// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coursekb::rouge {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Lowercase, whitespace split.
std::vector<std::string> tokenize(std::string_view text);

/// 2PR/(P+R), or 0 when P+R = 0.
double f_measure(double precision, double recall) noexcept;

/// Clipped n-gram multiset overlap. A side with fewer than n tokens has no
/// n-grams and its ratio is 0. Throws empty_input for empty text.
RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n);

/// Longest common subsequence over token sequences.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

}  // namespace coursekb::rouge
