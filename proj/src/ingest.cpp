// SPDX-License-Identifier: Apache-2.0
#include "coursekb/ingest.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"
#include "http_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

namespace coursekb::ingest {

using nlohmann::json;

namespace {

constexpr std::size_t kVideoIdLength = 11;

bool is_id_char(char c) noexcept {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

// Accepts exactly 11 id characters starting at `pos`, followed by end of
// string or a URL delimiter.
std::optional<std::string> take_id(std::string_view s, std::size_t pos) {
    if (pos + kVideoIdLength > s.size()) return std::nullopt;
    for (std::size_t i = 0; i < kVideoIdLength; ++i) {
        if (!is_id_char(s[pos + i])) return std::nullopt;
    }
    const auto end = pos + kVideoIdLength;
    if (end < s.size()) {
        const char next = s[end];
        if (next != '&' && next != '?' && next != '#' && next != '/') return std::nullopt;
    }
    return std::string(s.substr(pos, kVideoIdLength));
}

std::string_view strip_scheme_and_host_prefix(std::string_view url) {
    for (std::string_view scheme : {"https://", "http://"}) {
        if (url.starts_with(scheme)) {
            url.remove_prefix(scheme.size());
            break;
        }
    }
    for (std::string_view prefix : {"www.", "m."}) {
        if (url.starts_with(prefix)) {
            url.remove_prefix(prefix.size());
            break;
        }
    }
    return url;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Removes complete [..] groups and h:mm(:ss)(.fff) timestamps until a fixed point.
std::string strip_cues_and_timestamps(std::string s) {
    static const std::regex cue(R"(\[[^\[\]]*\])");
    static const std::regex stamp(R"(\d+(?::\d+)+(?:[.,]\d+)?)");
    for (;;) {
        auto next = std::regex_replace(s, cue, " ");
        next = std::regex_replace(next, stamp, " ");
        if (next == s) return s;
        s = std::move(next);
    }
}

std::vector<std::string> parse_csv_row_cells(std::string_view input, std::size_t& pos) {
    std::vector<std::string> cells;
    std::string cell;
    bool in_quotes = false;
    while (pos < input.size()) {
        const char c = input[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < input.size() && input[pos + 1] == '"') {
                    cell.push_back('"');
                    pos += 2;
                    continue;
                }
                in_quotes = false;
            } else {
                cell.push_back(c == '\n' ? ' ' : c);
            }
            ++pos;
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n') {
            ++pos;
            break;
        } else {
            cell.push_back(c);
        }
        ++pos;
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string normalize_newlines(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

}  // namespace

std::string parse_video_id(std::string_view url) {
    if (url.empty()) fail(ErrorCode::malformed_url, "empty URL");
    const auto rest = strip_scheme_and_host_prefix(url);

    if (rest.starts_with("youtu.be/")) {
        if (auto id = take_id(rest, std::string_view("youtu.be/").size())) return *id;
    } else if (rest.starts_with("youtube.com/watch?")) {
        const auto query_start = std::string_view("youtube.com/watch?").size();
        std::size_t pos = query_start;
        while (pos < rest.size()) {
            if (rest.substr(pos).starts_with("v=")) {
                if (auto id = take_id(rest, pos + 2)) return *id;
                break;
            }
            const auto amp = rest.find('&', pos);
            if (amp == std::string_view::npos) break;
            pos = amp + 1;
        }
    }
    fail(ErrorCode::malformed_url, "no YouTube video id in URL: " + std::string(url));
}

FixtureTranscriptProvider::FixtureTranscriptProvider(std::filesystem::path root) : root_(std::move(root)) {}

Transcript FixtureTranscriptProvider::fetch(const std::string& video_id,
                                            const std::vector<std::string>& preferred_langs) {
    const auto dir = root_ / video_id;
    std::error_code ec;
    if (video_id.empty() || !std::filesystem::is_directory(dir, ec)) {
        fail(ErrorCode::transcript_unavailable, "no captions for video " + video_id);
    }
    bool any_track = false;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.path().extension() == ".json") any_track = true;
    }
    if (!any_track) fail(ErrorCode::transcript_unavailable, "no captions for video " + video_id);

    for (const auto& lang : preferred_langs) {
        const auto track = dir / (lang + ".json");
        if (!std::filesystem::is_regular_file(track, ec)) continue;
        Transcript t;
        t.language = lang;
        t.entries = parse_transcript_json(read_file(track));
        t.video_title = text::trim(read_file(dir / "title.txt"));
        return t;
    }
    fail(ErrorCode::language_unavailable, "none of the preferred languages available for " + video_id);
}

HttpTranscriptProvider::HttpTranscriptProvider(std::string base_url) : base_url_(std::move(base_url)) {}

Transcript HttpTranscriptProvider::fetch(const std::string& video_id,
                                         const std::vector<std::string>& preferred_langs) {
    const auto url = detail::split_url(base_url_);
    if (url.origin.empty()) fail(ErrorCode::provider_unreachable, "transcript endpoint is not an http URL");
    auto client = detail::make_client(url.origin);

    auto meta = client->Get(detail::join_path(url.path, "videos/" + video_id));
    if (!meta) fail(ErrorCode::provider_unreachable, "transcript provider unreachable");
    if (meta->status == 404) fail(ErrorCode::transcript_unavailable, "no captions for video " + video_id);
    if (meta->status != 200) fail(ErrorCode::provider_unreachable, "transcript provider returned an error");

    json info;
    try {
        info = json::parse(meta->body);
    } catch (const json::exception&) {
        fail(ErrorCode::provider_unreachable, "transcript provider sent malformed metadata");
    }
    const auto languages = info.value("languages", std::vector<std::string>{});
    if (languages.empty()) fail(ErrorCode::transcript_unavailable, "no captions for video " + video_id);

    for (const auto& lang : preferred_langs) {
        if (std::find(languages.begin(), languages.end(), lang) == languages.end()) continue;
        auto res = client->Get(detail::join_path(url.path, "videos/" + video_id + "/transcript"),
                               httplib::Params{{"lang", lang}}, httplib::Headers{});
        if (!res) fail(ErrorCode::provider_unreachable, "transcript provider unreachable");
        if (res->status != 200) fail(ErrorCode::provider_unreachable, "transcript provider returned an error");
        Transcript t;
        t.language = lang;
        t.video_title = info.value("title", std::string{});
        t.entries = parse_transcript_json(res->body);
        return t;
    }
    fail(ErrorCode::language_unavailable, "none of the preferred languages available for " + video_id);
}

std::vector<TranscriptEntry> parse_transcript_json(std::string_view json_text) {
    std::vector<TranscriptEntry> entries;
    try {
        const auto doc = json::parse(json_text);
        if (!doc.is_array()) fail(ErrorCode::provider_unreachable, "transcript payload is not an array");
        for (const auto& item : doc) {
            TranscriptEntry e;
            e.text = item.at("text").get<std::string>();
            e.start_seconds = item.at("start").get<double>();
            e.duration_seconds = item.at("duration").get<double>();
            if (!std::isfinite(e.start_seconds) || e.start_seconds < 0 || !std::isfinite(e.duration_seconds) ||
                e.duration_seconds < 0) {
                fail(ErrorCode::provider_unreachable, "transcript entry has negative timing");
            }
            entries.push_back(std::move(e));
        }
    } catch (const json::exception& ex) {
        fail(ErrorCode::provider_unreachable, std::string("malformed transcript payload: ") + ex.what());
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.start_seconds < b.start_seconds; });
    return entries;
}

std::string clean_transcript(const std::vector<TranscriptEntry>& entries, std::string_view video_title) {
    std::string joined;
    for (const auto& e : entries) {
        joined += e.text;
        joined.push_back(' ');
    }
    const auto body = text::collapse_whitespace(strip_cues_and_timestamps(std::move(joined)));
    if (body.empty()) fail(ErrorCode::empty_transcript, "transcript has no caption text");

    const auto title = text::collapse_whitespace(strip_cues_and_timestamps(std::string(video_title)));
    if (title.empty()) return body;
    return title + "\n\n" + body;
}

std::string parse_upload(std::string_view bytes, UploadFormat format) {
    if (bytes.empty()) fail(ErrorCode::empty_document, "upload is empty");
    if (!text::is_valid_utf8(bytes)) fail(ErrorCode::invalid_encoding, "upload is not valid UTF-8");
    if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
    auto normalized = normalize_newlines(bytes);

    std::string out;
    if (format == UploadFormat::csv) {
        std::size_t pos = 0;
        while (pos < normalized.size()) {
            auto cells = parse_csv_row_cells(normalized, pos);
            if (cells.size() == 1 && text::trim(cells[0]).empty()) continue;
            if (!out.empty()) out.push_back('\n');
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i > 0) out += ", ";
                out += cells[i];
            }
        }
    } else {
        out = std::move(normalized);
    }
    if (text::collapse_whitespace(out).empty()) fail(ErrorCode::empty_document, "upload has no text");
    return out;
}

UploadFormat parse_format(std::string_view name) {
    const auto lower = text::to_lower_ascii(name);
    if (lower == "txt" || lower == "text" || lower == "text/plain") return UploadFormat::txt;
    if (lower == "md" || lower == "markdown" || lower == "text/markdown") return UploadFormat::md;
    if (lower == "csv" || lower == "text/csv") return UploadFormat::csv;
    fail(ErrorCode::unsupported_format, "unsupported upload format: " + std::string(name));
}

std::string_view format_name(UploadFormat format) noexcept {
    switch (format) {
    case UploadFormat::txt: return "txt";
    case UploadFormat::md: return "md";
    case UploadFormat::csv: return "csv";
    }
    return "txt";
}

std::string_view origin_name(Origin origin) noexcept {
    return origin == Origin::youtube ? "youtube" : "upload";
}

}  // namespace coursekb::ingest
