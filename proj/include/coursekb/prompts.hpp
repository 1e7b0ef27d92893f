// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "coursekb/chunker.hpp"

#include <span>
#include <string>
#include <string_view>

namespace coursekb {

enum class PromptMode { restricted, relaxed, medical };

inline constexpr std::string_view kRefusalAnswer = "I don't know.";

/// Verbatim template for the mode, with one `{context}` and one `{question}`
/// slot.
std::string_view template_text(PromptMode mode) noexcept;
std::string_view mode_name(PromptMode mode) noexcept;
/// Throws unknown_mode.
PromptMode parse_mode(std::string_view name);

/// Chunk texts in the given (rank) order separated by blank lines.
std::string join_context(std::span<const Chunk> context_chunks);

/// Fills the mode's template. Context may be empty only in restricted mode.
std::string render_prompt(PromptMode mode, std::span<const Chunk> context_chunks, std::string_view question);

}  // namespace coursekb
