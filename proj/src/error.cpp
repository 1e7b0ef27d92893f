// SPDX-License-Identifier: Apache-2.0
#include "coursekb/error.hpp"

namespace coursekb {

std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::malformed_url: return "malformed_url";
    case ErrorCode::transcript_unavailable: return "transcript_unavailable";
    case ErrorCode::provider_unreachable: return "provider_unreachable";
    case ErrorCode::language_unavailable: return "language_unavailable";
    case ErrorCode::empty_transcript: return "empty_transcript";
    case ErrorCode::invalid_encoding: return "invalid_encoding";
    case ErrorCode::unsupported_format: return "unsupported_format";
    case ErrorCode::empty_document: return "empty_document";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::empty_course: return "empty_course";
    case ErrorCode::store_unavailable: return "store_unavailable";
    case ErrorCode::serialization_failure: return "serialization_failure";
    case ErrorCode::index_not_found: return "index_not_found";
    case ErrorCode::corrupt_index: return "corrupt_index";
    case ErrorCode::empty_query: return "empty_query";
    case ErrorCode::empty_index: return "empty_index";
    case ErrorCode::unknown_mode: return "unknown_mode";
    case ErrorCode::access_denied: return "access_denied";
    case ErrorCode::llm_unavailable: return "llm_unavailable";
    case ErrorCode::username_taken: return "username_taken";
    case ErrorCode::weak_password: return "weak_password";
    case ErrorCode::gateway_unreachable: return "gateway_unreachable";
    case ErrorCode::payment_failed: return "payment_failed";
    case ErrorCode::invalid_credentials: return "invalid_credentials";
    case ErrorCode::payment_required: return "payment_required";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::duplicate_slug: return "duplicate_slug";
    case ErrorCode::not_private_course: return "not_private_course";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::course_not_found: return "course_not_found";
    case ErrorCode::quiz_not_found: return "quiz_not_found";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::insufficient_content: return "insufficient_content";
    case ErrorCode::internal: return "internal";
    }
    return "internal";
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_credentials:
    case ErrorCode::unauthorized:
        return 401;
    case ErrorCode::payment_required:
    case ErrorCode::payment_failed:
        return 402;
    case ErrorCode::access_denied:
        return 403;
    case ErrorCode::index_not_found:
    case ErrorCode::not_found:
    case ErrorCode::course_not_found:
    case ErrorCode::quiz_not_found:
        return 404;
    case ErrorCode::username_taken:
    case ErrorCode::duplicate_slug:
    case ErrorCode::not_private_course:
        return 409;
    case ErrorCode::unsupported_format:
        return 415;
    case ErrorCode::insufficient_content:
    case ErrorCode::empty_transcript:
        return 422;
    case ErrorCode::transcript_unavailable:
    case ErrorCode::language_unavailable:
        return 424;
    case ErrorCode::llm_unavailable:
    case ErrorCode::provider_unreachable:
    case ErrorCode::gateway_unreachable:
        return 502;
    case ErrorCode::store_unavailable:
        return 503;
    case ErrorCode::corrupt_index:
    case ErrorCode::serialization_failure:
    case ErrorCode::internal:
        return 500;
    default:
        return 400;
    }
}

}  // namespace coursekb
