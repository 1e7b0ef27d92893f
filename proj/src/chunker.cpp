// SPDX-License-Identifier: Apache-2.0
#include "coursekb/chunker.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"

namespace coursekb {

namespace {

std::vector<std::string> paragraphs(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text.substr(pos, nl - pos);
        if (text::split_whitespace(line).empty()) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else {
            if (!current.empty()) current.push_back('\n');
            current.append(line);
        }
        pos = nl + 1;
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back(' ');
        out += words[i];
    }
    return out;
}

}  // namespace

std::vector<Chunk> chunk_text(std::string_view text, std::string_view doc_id, const ChunkingOptions& options,
                              ChunkId first_chunk_id) {
    if (options.max_chunk_words == 0 || options.overlap_words >= options.max_chunk_words) {
        fail(ErrorCode::invalid_argument, "chunking requires max_chunk_words > overlap_words >= 0");
    }
    if (text.empty()) fail(ErrorCode::empty_input, "cannot chunk empty text");

    std::vector<Chunk> chunks;
    const auto emit = [&](const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
        Chunk c;
        c.chunk_id = first_chunk_id + static_cast<ChunkId>(chunks.size());
        c.doc_id = std::string(doc_id);
        c.ordinal = static_cast<std::uint32_t>(chunks.size());
        c.text = join_words(words, begin, end);
        c.word_count = static_cast<std::uint32_t>(end - begin);
        chunks.push_back(std::move(c));
    };

    const auto stride = options.max_chunk_words - options.overlap_words;
    for (const auto& para : paragraphs(text)) {
        const auto words = text::split_whitespace(para);
        if (words.empty()) continue;
        if (words.size() <= options.max_chunk_words) {
            emit(words, 0, words.size());
            continue;
        }
        for (std::size_t start = 0;; start += stride) {
            const auto end = std::min(start + options.max_chunk_words, words.size());
            emit(words, start, end);
            if (end == words.size()) break;
        }
    }
    if (chunks.empty()) fail(ErrorCode::empty_input, "text contains no words");
    return chunks;
}

}  // namespace coursekb
