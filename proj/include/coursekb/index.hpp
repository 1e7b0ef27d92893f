// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/chunker.hpp"
#include "coursekb/embedding.hpp"
#include "coursekb/object_store.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coursekb {

struct Posting {
    ChunkId chunk_id = 0;
    std::uint32_t term_frequency = 0;

    bool operator==(const Posting&) const = default;
};

/// Per-course hybrid retrieval state. Chunk ids equal row positions in
/// `chunks`, `doc_lengths` and `vectors`.
struct CourseIndex {
    std::string course_id;
    std::vector<Chunk> chunks;
    std::map<std::string, std::vector<Posting>, std::less<>> postings;  // sorted by chunk_id
    std::vector<std::uint32_t> doc_lengths;                            // non-stopword tokens per chunk
    double avg_doc_length = 0.0;
    std::size_t dims = 0;
    std::vector<float> vectors;  // n_chunks x dims, row-major
    std::uint64_t manifest_version = 0;
    std::int64_t created_at_ms = 0;

    std::size_t n_chunks() const noexcept { return chunks.size(); }
    std::span<const float> vector(ChunkId id) const { return {vectors.data() + std::size_t{id} * dims, dims}; }
    /// Number of chunks containing `term`; 0 for unknown terms.
    std::size_t document_frequency(std::string_view term) const;
    /// Embeddings in row order, for rebuilding with extra chunks.
    std::vector<EmbeddingVector> embeddings() const;
};

/// Tokenises chunk text (lowercase, non-alphanumeric split, bundled stopwords
/// dropped, no stemming) into postings and length statistics. Chunk ids are
/// renumbered to row order. manifest_version = previous_version + 1.
CourseIndex build_index(std::string course_id, std::vector<Chunk> chunks, std::span<const EmbeddingVector> embeddings,
                        std::uint64_t previous_version = 0);

/// Verifies the structural invariants; throws corrupt_index on violation.
void check_index(const CourseIndex& index);

// Object-store layout -------------------------------------------------------

std::string course_prefix(std::string_view course_slug);
std::string index_prefix(std::string_view course_slug);
std::string manifest_key(std::string_view course_slug);
// Data objects are versioned; the manifest names the pair it was written with.
std::string postings_key(std::string_view course_slug, std::uint64_t version);
std::string vectors_key(std::string_view course_slug, std::uint64_t version);
std::string raw_prefix(std::string_view course_slug, std::string_view doc_id);
std::string raw_key(std::string_view course_slug, std::string_view doc_id, std::string_view filename);

// Serialised forms ----------------------------------------------------------

inline constexpr std::uint32_t kVectorsFormatVersion = 1;

std::string encode_vectors(const CourseIndex& index);
/// Returns (n_chunks, dims, values); throws corrupt_index on a bad header,
/// length or footer.
struct DecodedVectors {
    std::uint32_t n_chunks = 0;
    std::uint32_t dims = 0;
    std::vector<float> values;
};
DecodedVectors decode_vectors(std::string_view bytes);

std::string encode_postings(const CourseIndex& index);

struct PersistResult {
    std::string manifest_key;
    std::uint64_t manifest_version = 0;
};

/// Writes postings-<v>.jsonl, vectors-<v>.bin, then manifest.json under
/// courses/<slug>/index/, and sweeps superseded data objects. The written version is
/// max(index.manifest_version, stored version + 1).
PersistResult persist_index(const CourseIndex& index, std::string_view course_slug, ObjectStore& store);

/// Stored manifest version, or 0 when no manifest exists.
std::uint64_t stored_manifest_version(std::string_view course_slug, const ObjectStore& store);

CourseIndex load_index(std::string_view course_slug, const ObjectStore& store);

/// Removes the raw upload of `doc_id` once the persisted index covers it.
/// Idempotent. Throws index_not_found when the stored index does not yet
/// contain chunks of the document, leaving the raw object in place.
void finalize_upload(std::string_view doc_id, std::string_view course_slug, ObjectStore& store);

}  // namespace coursekb
