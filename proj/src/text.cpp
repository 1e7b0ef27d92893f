// SPDX-License-Identifier: Apache-2.0
#include "coursekb/text.hpp"

#include <sodium.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <stdexcept>

namespace coursekb::text {

namespace {

constexpr std::array<std::string_view, 50> kStopwords = {
    "a",    "an",   "and",   "are",  "as",   "at",    "be",   "but",  "by",    "can",
    "do",   "does", "for",   "from", "has",  "have",  "he",   "how",  "i",     "if",
    "in",   "into", "is",    "it",   "its",  "not",   "of",   "on",   "or",    "so",
    "that", "the",  "their", "them", "there", "they", "this", "to",   "was",   "we",
    "were", "what", "when",  "where", "which", "who",  "why",  "will", "with", "you",
};

void ensure_sodium() {
    static const bool ok = sodium_init() >= 0;
    if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

// Decodes one code point at s[i]; returns its byte length, 0 on malformed input.
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) noexcept {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return 0;
    }
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return 0;
    if (cp >= 0xD800 && cp <= 0xDFFF) return 0;
    if (cp > 0x10FFFF) return 0;
    return len;
}

bool is_unicode_space(char32_t cp) noexcept {
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_word_byte(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

bool is_valid_utf8(std::string_view bytes) noexcept {
    std::size_t i = 0;
    while (i < bytes.size()) {
        char32_t cp = 0;
        const auto len = decode_utf8(bytes, i, cp);
        if (len == 0) return false;
        i += len;
    }
    return true;
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::string current;
    std::size_t i = 0;
    while (i < s.size()) {
        char32_t cp = 0;
        auto len = decode_utf8(s, i, cp);
        if (len == 0) {
            // Not UTF-8: treat the byte as an opaque word character.
            current.push_back(s[i]);
            ++i;
            continue;
        }
        if (is_unicode_space(cp)) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else {
            current.append(s.substr(i, len));
        }
        i += len;
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    for (const auto& tok : split_whitespace(s)) {
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::span<const std::string_view> stopwords() noexcept { return kStopwords; }

bool is_stopword(std::string_view term) noexcept {
    return std::binary_search(kStopwords.begin(), kStopwords.end(), term);
}

const std::string& stopwords_sha256() {
    static const std::string digest = [] {
        std::string joined;
        for (auto w : kStopwords) {
            joined.append(w);
            joined.push_back('\n');
        }
        return sha256_hex(joined);
    }();
    return digest;
}

std::vector<std::string> index_terms(std::string_view s) {
    auto tokens = word_tokens(s);
    std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
    return tokens;
}

std::string slug(std::string_view title) {
    std::string out;
    bool pending_dash = false;
    for (char ch : title) {
        const auto c = static_cast<unsigned char>(ch);
        const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (!alnum) {
            pending_dash = true;
            continue;
        }
        if (pending_dash && !out.empty()) out.push_back('-');
        pending_dash = false;
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    }
    if (out.empty()) out = "course-" + sha256_hex(title).substr(0, 12);
    return out;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\n' && c != '\r'; };
    auto b = std::find_if(s.begin(), s.end(), not_space);
    auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return b < e ? std::string(b, e) : std::string();
}

std::string sha256_hex(std::string_view bytes) {
    ensure_sodium();
    std::array<unsigned char, crypto_hash_sha256_BYTES> digest{};
    crypto_hash_sha256(digest.data(), reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
    std::string hex(digest.size() * 2 + 1, '\0');
    sodium_bin2hex(hex.data(), hex.size(), digest.data(), digest.size());
    hex.pop_back();
    return hex;
}

std::string random_hex(std::size_t n_bytes) {
    ensure_sodium();
    std::vector<unsigned char> buf(n_bytes);
    randombytes_buf(buf.data(), buf.size());
    std::string hex(n_bytes * 2 + 1, '\0');
    sodium_bin2hex(hex.data(), hex.size(), buf.data(), buf.size());
    hex.pop_back();
    return hex;
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string iso8601_utc(std::int64_t epoch_ms) {
    const std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    const auto n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%.*s.%03lldZ", static_cast<int>(n), buf,
                  static_cast<long long>(epoch_ms % 1000));
    return out;
}

}  // namespace coursekb::text
