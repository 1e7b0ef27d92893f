// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace coursekb {

using ChunkId = std::uint32_t;

/// Ordered unit of course text; the retrieval granule. chunk_id is the
/// chunk's row in its course index and doubles as the course-wide ordinal.
struct Chunk {
    ChunkId chunk_id = 0;
    std::string doc_id;
    std::uint32_t ordinal = 0;  // position within doc_id
    std::string text;
    std::uint32_t word_count = 0;

    bool operator==(const Chunk&) const = default;
};

struct ChunkingOptions {
    std::size_t max_chunk_words = 512;
    std::size_t overlap_words = 64;
};

/// Paragraph-first segmentation: blank lines separate paragraphs; a paragraph
/// longer than max_chunk_words becomes windows of that size advancing by
/// max_chunk_words - overlap_words. Chunk text is the window's words joined
/// by single spaces. chunk_id is assigned from `first_chunk_id` upward.
std::vector<Chunk> chunk_text(std::string_view text, std::string_view doc_id, const ChunkingOptions& options = {},
                              ChunkId first_chunk_id = 0);

}  // namespace coursekb
