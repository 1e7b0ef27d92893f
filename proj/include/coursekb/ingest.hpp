// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace coursekb::ingest {

enum class Origin { upload, youtube };
enum class UploadFormat { txt, md, csv };

struct SourceDocument {
    std::string doc_id;
    std::string course_id;
    std::string title;
    Origin origin = Origin::upload;
    std::string origin_ref;
    std::string body;
    std::int64_t ingested_at_ms = 0;
};

struct TranscriptEntry {
    std::string text;
    double start_seconds = 0.0;
    double duration_seconds = 0.0;
};

struct Transcript {
    std::string language;
    std::string video_title;
    std::vector<TranscriptEntry> entries;
};

/// Extracts the 11-character id from `watch?v=` or `youtu.be/` URLs.
std::string parse_video_id(std::string_view url);

/// Source of caption tracks. fetch() walks `preferred_langs` in order and
/// returns the first available track.
class TranscriptProvider {
public:
    virtual ~TranscriptProvider() = default;
    virtual Transcript fetch(const std::string& video_id,
                             const std::vector<std::string>& preferred_langs) = 0;
};

/// Reads canned tracks from `<root>/<video_id>/<lang>.json` (a JSON array of
/// {text, start, duration}) with the title in `<root>/<video_id>/title.txt`.
class FixtureTranscriptProvider : public TranscriptProvider {
public:
    explicit FixtureTranscriptProvider(std::filesystem::path root);
    Transcript fetch(const std::string& video_id,
                     const std::vector<std::string>& preferred_langs) override;

private:
    std::filesystem::path root_;
};

/// HTTP provider: GET <base>/videos/<id> -> {"title", "languages": [...]},
/// GET <base>/videos/<id>/transcript?lang=<code> -> [{text, start, duration}].
class HttpTranscriptProvider : public TranscriptProvider {
public:
    explicit HttpTranscriptProvider(std::string base_url);
    Transcript fetch(const std::string& video_id,
                     const std::vector<std::string>& preferred_langs) override;

private:
    std::string base_url_;
};

/// Parses the provider wire shape: [{"text": str, "start": num, "duration": num}, ...].
std::vector<TranscriptEntry> parse_transcript_json(std::string_view json_text);

/// Title, blank line, then caption texts with timing dropped, bracketed cue
/// tokens removed and whitespace collapsed.
std::string clean_transcript(const std::vector<TranscriptEntry>& entries, std::string_view video_title);

std::string parse_upload(std::string_view bytes, UploadFormat format);
UploadFormat parse_format(std::string_view name);
std::string_view format_name(UploadFormat format) noexcept;
std::string_view origin_name(Origin origin) noexcept;

}  // namespace coursekb::ingest
