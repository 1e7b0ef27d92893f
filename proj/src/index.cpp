// SPDX-License-Identifier: Apache-2.0
#include "coursekb/index.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace coursekb {

using nlohmann::json;

namespace {

constexpr std::string_view kVectorsMagic = "VRIX";
constexpr std::size_t kVectorsHeaderBytes = 16;
constexpr std::size_t kVectorsFooterBytes = 8;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(in[pos + i])} << (8 * i);
    return v;
}

std::uint64_t get_u64(std::string_view in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(in[pos + i])} << (8 * i);
    return v;
}

json chunk_to_json(const Chunk& c) {
    return {{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id}, {"ordinal", c.ordinal},
            {"text", c.text},         {"word_count", c.word_count}};
}

Chunk chunk_from_json(const json& j) {
    Chunk c;
    c.chunk_id = j.at("chunk_id").get<ChunkId>();
    c.doc_id = j.at("doc_id").get<std::string>();
    c.ordinal = j.at("ordinal").get<std::uint32_t>();
    c.text = j.at("text").get<std::string>();
    c.word_count = j.at("word_count").get<std::uint32_t>();
    return c;
}

json read_manifest(std::string_view course_slug, const ObjectStore& store) {
    std::string raw;
    try {
        raw = store.get(manifest_key(course_slug));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::not_found) {
            fail(ErrorCode::index_not_found, "no index for course '" + std::string(course_slug) + "'");
        }
        throw;
    }
    try {
        return json::parse(raw);
    } catch (const json::exception& ex) {
        fail(ErrorCode::corrupt_index, std::string("manifest.json does not parse: ") + ex.what());
    }
}

std::string fetch_component(const ObjectStore& store, const std::string& key) {
    try {
        return store.get(key);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::not_found) fail(ErrorCode::corrupt_index, "manifest references missing " + key);
        throw;
    }
}

}  // namespace

std::size_t CourseIndex::document_frequency(std::string_view term) const {
    auto it = postings.find(term);
    return it == postings.end() ? 0 : it->second.size();
}

std::vector<EmbeddingVector> CourseIndex::embeddings() const {
    std::vector<EmbeddingVector> out(n_chunks());
    for (std::size_t i = 0; i < n_chunks(); ++i) {
        const auto row = vector(static_cast<ChunkId>(i));
        out[i].values.assign(row.begin(), row.end());
    }
    return out;
}

CourseIndex build_index(std::string course_id, std::vector<Chunk> chunks, std::span<const EmbeddingVector> embeddings,
                        std::uint64_t previous_version) {
    if (chunks.empty()) fail(ErrorCode::empty_course, "cannot index a course without chunks");
    if (chunks.size() != embeddings.size()) {
        fail(ErrorCode::invalid_argument, "chunk and embedding counts differ");
    }
    const auto dims = embeddings.front().dims();
    if (dims == 0) fail(ErrorCode::dimension_mismatch, "embeddings have zero dimensions");

    CourseIndex index;
    index.course_id = std::move(course_id);
    index.dims = dims;
    index.manifest_version = previous_version + 1;
    index.created_at_ms = text::now_ms();
    index.vectors.reserve(chunks.size() * dims);
    index.doc_lengths.reserve(chunks.size());

    for (std::size_t row = 0; row < chunks.size(); ++row) {
        const auto& emb = embeddings[row];
        if (emb.dims() != dims) {
            fail(ErrorCode::dimension_mismatch, "embedding " + std::to_string(row) + " has " +
                                                    std::to_string(emb.dims()) + " dims, expected " +
                                                    std::to_string(dims));
        }
        for (float v : emb.values) {
            if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "embedding contains non-finite values");
        }
        index.vectors.insert(index.vectors.end(), emb.values.begin(), emb.values.end());

        auto& chunk = chunks[row];
        chunk.chunk_id = static_cast<ChunkId>(row);
        std::map<std::string, std::uint32_t, std::less<>> tf;
        std::uint32_t length = 0;
        for (auto& term : text::index_terms(chunk.text)) {
            ++tf[std::move(term)];
            ++length;
        }
        for (const auto& [term, count] : tf) index.postings[term].push_back({chunk.chunk_id, count});
        index.doc_lengths.push_back(length);
    }
    index.chunks = std::move(chunks);
    const double total = std::accumulate(index.doc_lengths.begin(), index.doc_lengths.end(), 0.0);
    index.avg_doc_length = total / static_cast<double>(index.doc_lengths.size());
    return index;
}

void check_index(const CourseIndex& index) {
    const auto n = index.n_chunks();
    if (n == 0) fail(ErrorCode::corrupt_index, "index has no chunks");
    if (index.doc_lengths.size() != n) fail(ErrorCode::corrupt_index, "doc_lengths size differs from chunk count");
    if (index.dims == 0 || index.vectors.size() != n * index.dims) {
        fail(ErrorCode::corrupt_index, "vector matrix shape differs from chunk count x dims");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (index.chunks[i].chunk_id != i) fail(ErrorCode::corrupt_index, "chunk ids are not row-ordered");
    }
    std::vector<std::uint64_t> sums(n, 0);
    for (const auto& [term, list] : index.postings) {
        if (list.empty()) fail(ErrorCode::corrupt_index, "empty posting list for '" + term + "'");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& p = list[i];
            if (p.chunk_id >= n) fail(ErrorCode::corrupt_index, "posting references unknown chunk");
            if (p.term_frequency < 1) fail(ErrorCode::corrupt_index, "posting with zero term frequency");
            if (i > 0 && list[i - 1].chunk_id >= p.chunk_id) {
                fail(ErrorCode::corrupt_index, "posting list for '" + term + "' is not strictly ordered");
            }
            sums[p.chunk_id] += p.term_frequency;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (sums[i] != index.doc_lengths[i]) fail(ErrorCode::corrupt_index, "postings disagree with doc_lengths");
    }
    const double mean =
        std::accumulate(index.doc_lengths.begin(), index.doc_lengths.end(), 0.0) / static_cast<double>(n);
    if (std::abs(mean - index.avg_doc_length) > 1e-9 * std::max(1.0, mean)) {
        fail(ErrorCode::corrupt_index, "avg_doc_length is not the mean of doc_lengths");
    }
}

std::string course_prefix(std::string_view course_slug) { return "courses/" + std::string(course_slug) + "/"; }
std::string index_prefix(std::string_view course_slug) { return course_prefix(course_slug) + "index/"; }
std::string manifest_key(std::string_view course_slug) { return index_prefix(course_slug) + "manifest.json"; }
std::string postings_key(std::string_view course_slug, std::uint64_t version) {
    return index_prefix(course_slug) + "postings-" + std::to_string(version) + ".jsonl";
}
std::string vectors_key(std::string_view course_slug, std::uint64_t version) {
    return index_prefix(course_slug) + "vectors-" + std::to_string(version) + ".bin";
}

std::string raw_prefix(std::string_view course_slug, std::string_view doc_id) {
    return course_prefix(course_slug) + "raw/" + std::string(doc_id) + "/";
}

std::string raw_key(std::string_view course_slug, std::string_view doc_id, std::string_view filename) {
    return raw_prefix(course_slug, doc_id) + std::string(filename);
}

std::string encode_vectors(const CourseIndex& index) {
    std::string out;
    out.reserve(kVectorsHeaderBytes + index.vectors.size() * 4 + kVectorsFooterBytes);
    out.append(kVectorsMagic);
    put_u32(out, kVectorsFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(index.n_chunks()));
    put_u32(out, static_cast<std::uint32_t>(index.dims));
    for (float v : index.vectors) put_u32(out, std::bit_cast<std::uint32_t>(v));
    put_u64(out, out.size());
    return out;
}

DecodedVectors decode_vectors(std::string_view bytes) {
    if (bytes.size() < kVectorsHeaderBytes + kVectorsFooterBytes || bytes.substr(0, 4) != kVectorsMagic) {
        fail(ErrorCode::corrupt_index, "vectors.bin has a bad header");
    }
    if (get_u32(bytes, 4) != kVectorsFormatVersion) fail(ErrorCode::corrupt_index, "unsupported vectors.bin version");
    DecodedVectors out;
    out.n_chunks = get_u32(bytes, 8);
    out.dims = get_u32(bytes, 12);
    const auto payload = std::uint64_t{out.n_chunks} * out.dims * 4;
    if (bytes.size() != kVectorsHeaderBytes + payload + kVectorsFooterBytes) {
        fail(ErrorCode::corrupt_index, "vectors.bin length does not match its header");
    }
    if (get_u64(bytes, bytes.size() - kVectorsFooterBytes) != kVectorsHeaderBytes + payload) {
        fail(ErrorCode::corrupt_index, "vectors.bin footer length mismatch");
    }
    out.values.resize(std::size_t{out.n_chunks} * out.dims);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = std::bit_cast<float>(get_u32(bytes, kVectorsHeaderBytes + 4 * i));
    }
    return out;
}

std::string encode_postings(const CourseIndex& index) {
    std::string out;
    for (const auto& [term, list] : index.postings) {
        json pairs = json::array();
        for (const auto& p : list) pairs.push_back({p.chunk_id, p.term_frequency});
        out += json{{"term", term}, {"postings", std::move(pairs)}}.dump();
        out.push_back('\n');
    }
    return out;
}

std::uint64_t stored_manifest_version(std::string_view course_slug, const ObjectStore& store) {
    const auto key = manifest_key(course_slug);
    if (!store.exists(key)) return 0;
    try {
        return json::parse(store.get(key)).at("manifest_version").get<std::uint64_t>();
    } catch (const json::exception&) {
        return 0;
    }
}

PersistResult persist_index(const CourseIndex& index, std::string_view course_slug, ObjectStore& store) {
    check_index(index);
    const auto version = std::max(index.manifest_version, stored_manifest_version(course_slug, store) + 1);

    std::string postings_bytes;
    std::string vectors_bytes;
    json manifest;
    try {
        postings_bytes = encode_postings(index);
        vectors_bytes = encode_vectors(index);
        json chunks = json::array();
        for (const auto& c : index.chunks) chunks.push_back(chunk_to_json(c));
        manifest = {
            {"course_id", index.course_id},
            {"manifest_version", version},
            {"n_chunks", index.n_chunks()},
            {"dims", index.dims},
            {"avg_doc_length", index.avg_doc_length},
            {"stopwords_sha256", text::stopwords_sha256()},
            {"vectors_sha256", text::sha256_hex(vectors_bytes)},
            {"created_at", text::iso8601_utc(index.created_at_ms)},
            {"created_at_ms", index.created_at_ms},
            {"postings_sha256", text::sha256_hex(postings_bytes)},
            {"postings_key", postings_key(course_slug, version)},
            {"vectors_key", vectors_key(course_slug, version)},
            {"chunks", std::move(chunks)},
        };
    } catch (const json::exception& ex) {
        fail(ErrorCode::serialization_failure, std::string("cannot serialise index: ") + ex.what());
    }

    const auto translate = [](const Error& e) -> Error {
        if (e.code() == ErrorCode::store_unavailable) return e;
        return Error(ErrorCode::store_unavailable, e.what());
    };
    // Data objects are immutable per version; the manifest is written last, so a
    // failure at any point leaves the previous manifest and its objects intact.
    try {
        store.put(postings_key(course_slug, version), postings_bytes);
        store.put(vectors_key(course_slug, version), vectors_bytes);
        store.put(manifest_key(course_slug), manifest.dump(2));
    } catch (const Error& e) {
        throw translate(e);
    }
    const std::set<std::string> live = {manifest_key(course_slug), postings_key(course_slug, version),
                                        vectors_key(course_slug, version)};
    try {
        for (const auto& key : store.list(index_prefix(course_slug))) {
            if (!live.count(key)) store.remove(key);
        }
    } catch (const Error&) {
        // Stale objects are harmless; the next persist retries the sweep.
    }
    return {manifest_key(course_slug), version};
}

CourseIndex load_index(std::string_view course_slug, const ObjectStore& store) {
    const auto manifest = read_manifest(course_slug, store);
    std::string postings_bytes;
    std::string vectors_bytes;
    try {
        postings_bytes = fetch_component(store, manifest.at("postings_key").get<std::string>());
        vectors_bytes = fetch_component(store, manifest.at("vectors_key").get<std::string>());
    } catch (const json::exception& ex) {
        fail(ErrorCode::corrupt_index, std::string("manifest lacks component keys: ") + ex.what());
    }

    CourseIndex index;
    try {
        if (manifest.at("stopwords_sha256").get<std::string>() != text::stopwords_sha256()) {
            fail(ErrorCode::corrupt_index, "index was built with a different stopword list");
        }
        if (manifest.at("vectors_sha256").get<std::string>() != text::sha256_hex(vectors_bytes)) {
            fail(ErrorCode::corrupt_index, "vectors.bin checksum mismatch");
        }
        if (manifest.contains("postings_sha256") &&
            manifest.at("postings_sha256").get<std::string>() != text::sha256_hex(postings_bytes)) {
            fail(ErrorCode::corrupt_index, "postings.jsonl checksum mismatch");
        }
        index.course_id = manifest.at("course_id").get<std::string>();
        index.manifest_version = manifest.at("manifest_version").get<std::uint64_t>();
        index.dims = manifest.at("dims").get<std::size_t>();
        index.avg_doc_length = manifest.at("avg_doc_length").get<double>();
        index.created_at_ms = manifest.value("created_at_ms", std::int64_t{0});
        for (const auto& c : manifest.at("chunks")) index.chunks.push_back(chunk_from_json(c));
        if (manifest.at("n_chunks").get<std::size_t>() != index.chunks.size()) {
            fail(ErrorCode::corrupt_index, "manifest n_chunks disagrees with its chunk table");
        }

        std::istringstream lines(postings_bytes);
        std::string line;
        index.doc_lengths.assign(index.chunks.size(), 0);
        while (std::getline(lines, line)) {
            if (line.empty()) continue;
            const auto obj = json::parse(line);
            auto& list = index.postings[obj.at("term").get<std::string>()];
            for (const auto& pair : obj.at("postings")) {
                Posting p{pair.at(0).get<ChunkId>(), pair.at(1).get<std::uint32_t>()};
                if (p.chunk_id >= index.chunks.size()) {
                    fail(ErrorCode::corrupt_index, "posting references unknown chunk");
                }
                index.doc_lengths[p.chunk_id] += p.term_frequency;
                list.push_back(p);
            }
        }
    } catch (const json::exception& ex) {
        fail(ErrorCode::corrupt_index, std::string("index does not parse: ") + ex.what());
    }

    auto decoded = decode_vectors(vectors_bytes);
    if (decoded.n_chunks != index.chunks.size() || decoded.dims != index.dims) {
        fail(ErrorCode::corrupt_index, "vectors.bin shape disagrees with the manifest");
    }
    index.vectors = std::move(decoded.values);
    check_index(index);
    return index;
}

void finalize_upload(std::string_view doc_id, std::string_view course_slug, ObjectStore& store) {
    const auto manifest = read_manifest(course_slug, store);
    bool covered = false;
    try {
        for (const auto& c : manifest.at("chunks")) {
            if (c.at("doc_id").get<std::string>() == doc_id) {
                covered = true;
                break;
            }
        }
    } catch (const json::exception& ex) {
        fail(ErrorCode::corrupt_index, std::string("manifest.json is malformed: ") + ex.what());
    }
    if (!covered) {
        fail(ErrorCode::index_not_found,
             "stored index does not yet cover document '" + std::string(doc_id) + "'; raw upload kept");
    }
    for (const auto& key : store.list(raw_prefix(course_slug, doc_id))) store.remove(key);
}

}  // namespace coursekb
