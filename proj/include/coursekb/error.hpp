// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coursekb {

/// Stable failure categories shared by every module. The API layer maps each
/// one onto an HTTP status and a machine-readable code string.
enum class ErrorCode {
    invalid_argument,
    malformed_url,
    transcript_unavailable,
    provider_unreachable,
    language_unavailable,
    empty_transcript,
    invalid_encoding,
    unsupported_format,
    empty_document,
    empty_input,
    dimension_mismatch,
    empty_course,
    store_unavailable,
    serialization_failure,
    index_not_found,
    corrupt_index,
    empty_query,
    empty_index,
    unknown_mode,
    access_denied,
    llm_unavailable,
    username_taken,
    weak_password,
    gateway_unreachable,
    payment_failed,
    invalid_credentials,
    payment_required,
    unauthorized,
    duplicate_slug,
    not_private_course,
    not_found,
    course_not_found,
    quiz_not_found,
    length_mismatch,
    insufficient_content,
    internal,
};

std::string_view code_name(ErrorCode code) noexcept;
int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace coursekb
