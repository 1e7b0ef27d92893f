// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coursekb::text {

bool is_valid_utf8(std::string_view bytes) noexcept;

/// Splits on Unicode whitespace (ASCII space/tab/newline family, NBSP,
/// U+2000..U+200A, U+2028/2029, U+202F, U+205F, U+3000).
std::vector<std::string> split_whitespace(std::string_view s);

/// Joins tokens of split_whitespace() with single spaces.
std::string collapse_whitespace(std::string_view s);

/// Lowercased alphanumeric runs. ASCII letters are folded; bytes >= 0x80 are
/// kept as word characters so non-Latin scripts survive as opaque tokens.
std::vector<std::string> word_tokens(std::string_view s);

/// The fixed 50-word English stopword list, sorted.
std::span<const std::string_view> stopwords() noexcept;
bool is_stopword(std::string_view lowercase_term) noexcept;
/// SHA-256 over the stopwords joined by '\n'; recorded in index manifests.
const std::string& stopwords_sha256();

/// word_tokens() minus stopwords.
std::vector<std::string> index_terms(std::string_view s);

/// Lowercase slug over [a-z0-9-]; runs of other characters become one '-'.
std::string slug(std::string_view title);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);

std::string sha256_hex(std::string_view bytes);
std::string random_hex(std::size_t n_bytes);

std::int64_t now_ms();
std::string iso8601_utc(std::int64_t epoch_ms);

}  // namespace coursekb::text
