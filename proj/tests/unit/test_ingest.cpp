// SPDX-License-Identifier: Apache-2.0
#include "coursekb/error.hpp"
#include "coursekb/ingest.hpp"

#include "support/support.hpp"

#include <doctest.h>

#include <regex>

using namespace coursekb;
using namespace coursekb::ingest;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::internal;
}

FixtureTranscriptProvider fixtures() { return FixtureTranscriptProvider(testkit::data_dir() / "fixtures" / "transcripts"); }

std::string golden(const std::string& name) { return testkit::slurp(testkit::data_dir() / "golden" / "clean" / name); }

const std::regex kTimestamp(R"(\d+:\d+)");
const std::regex kCue(R"(\[[^\[\]]*\])");

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("video ids come from watch and short links only") {
    CHECK(parse_video_id("https://www.youtube.com/watch?v=intro0ML001") == "intro0ML001");
    CHECK(parse_video_id("https://youtube.com/watch?feature=share&v=intro0ML001&t=30") == "intro0ML001");
    CHECK(parse_video_id("https://youtu.be/intro0ML001?t=5") == "intro0ML001");
    CHECK(parse_video_id("http://youtu.be/a-b_C123456") == "a-b_C123456");
    CHECK(code_of([] { parse_video_id("https://youtu.be/short"); }) == ErrorCode::malformed_url);
    CHECK(code_of([] { parse_video_id("https://youtu.be/intro0ML001x"); }) == ErrorCode::malformed_url);
    CHECK(code_of([] { parse_video_id("https://example.com/watch?v=intro0ML001"); }) == ErrorCode::malformed_url);
    CHECK(code_of([] { parse_video_id("not a url"); }) == ErrorCode::malformed_url);
}

TEST_CASE("fixture provider walks preferred languages in order") {
    auto provider = fixtures();
    const auto de = provider.fetch("multiLang01", {"fr", "de", "en"});
    CHECK(de.language == "de");
    CHECK(de.video_title == "Regularisierung");
    CHECK(provider.fetch("multiLang01", {"en", "de"}).language == "en");
    CHECK(code_of([&] { provider.fetch("multiLang01", {"fr"}); }) == ErrorCode::language_unavailable);
    CHECK(code_of([&] { provider.fetch("noCaptions1", {"en"}); }) == ErrorCode::transcript_unavailable);
    CHECK(code_of([&] { provider.fetch("missingVid1", {"en"}); }) == ErrorCode::transcript_unavailable);
}

TEST_CASE("transcript entries are ordered by start time") {
    const auto entries = parse_transcript_json(
        R"([{"text":"b","start":5,"duration":1},{"text":"a","start":1,"duration":1},{"text":"c","start":5,"duration":2}])");
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].text == "a");
    CHECK(entries[1].text == "b");
    CHECK(entries[2].text == "c");
    CHECK(code_of([] { parse_transcript_json(R"({"text":"x"})"); }) == ErrorCode::provider_unreachable);
    CHECK(code_of([] { parse_transcript_json(R"([{"text":"x","start":-1,"duration":1}])"); }) ==
          ErrorCode::provider_unreachable);
}

TEST_CASE("clean transcript matches hand-derived goldens") {
    auto provider = fixtures();
    for (const std::string id : {"intro0ML001", "nested0Cue1", "e2eLecture1"}) {
        CAPTURE(id);
        const auto t = provider.fetch(id, {"en"});
        CHECK(clean_transcript(t.entries, t.video_title) == golden(id + ".txt"));
    }
    const auto de = provider.fetch("multiLang01", {"de"});
    CHECK(clean_transcript(de.entries, de.video_title) == golden("multiLang01.de.txt"));
}

TEST_CASE("cleaned fixtures contain no timestamps or cue tokens") {
    auto provider = fixtures();
    for (const std::string id : {"intro0ML001", "nested0Cue1", "e2eLecture1"}) {
        const auto t = provider.fetch(id, {"en"});
        const auto cleaned = clean_transcript(t.entries, t.video_title);
        CHECK_FALSE(std::regex_search(cleaned, kTimestamp));
        CHECK_FALSE(std::regex_search(cleaned, kCue));
    }
}

TEST_CASE("all-artifact transcripts are empty") {
    CHECK(code_of([] { clean_transcript({{"[Music]", 0.0, 2.0}}, "T"); }) == ErrorCode::empty_transcript);
    auto provider = fixtures();
    const auto t = provider.fetch("allArtifact", {"en"});
    CHECK(code_of([&] { clean_transcript(t.entries, t.video_title); }) == ErrorCode::empty_transcript);
}

TEST_CASE("cleaning is idempotent on its own output") {
    auto provider = fixtures();
    for (const std::string id : {"intro0ML001", "nested0Cue1", "e2eLecture1"}) {
        const auto t = provider.fetch(id, {"en"});
        const auto body = clean_transcript(t.entries, "");
        CHECK(clean_transcript({{body, 0.0, 0.0}}, "") == body);
    }
}

TEST_CASE("uploads normalise encoding and line endings") {
    CHECK(parse_upload("\xEF\xBB\xBFline one\r\nline two\rthree", UploadFormat::txt) == "line one\nline two\nthree");
    CHECK(parse_upload("# Title\n\nBody *text*", UploadFormat::md) == "# Title\n\nBody *text*");
    CHECK(code_of([] { parse_upload("", UploadFormat::txt); }) == ErrorCode::empty_document);
    CHECK(code_of([] { parse_upload("bad \xC3(", UploadFormat::txt); }) == ErrorCode::invalid_encoding);
}

TEST_CASE("csv uploads flatten rows with quoted cells") {
    const auto raw = testkit::slurp(testkit::data_dir() / "fixtures" / "docs" / "glossary.csv");
    CHECK(parse_upload(raw, UploadFormat::csv) == golden("glossary.csv.txt"));
}

TEST_CASE("declared formats") {
    CHECK(parse_format("txt") == UploadFormat::txt);
    CHECK(parse_format("MD") == UploadFormat::md);
    CHECK(parse_format("csv") == UploadFormat::csv);
    CHECK(code_of([] { parse_format("pdf"); }) == ErrorCode::unsupported_format);
    CHECK(code_of([] { parse_format(""); }) == ErrorCode::unsupported_format);
}

}  // TEST_SUITE
