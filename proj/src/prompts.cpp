// SPDX-License-Identifier: Apache-2.0
#include "coursekb/prompts.hpp"

#include "coursekb/error.hpp"
#include "coursekb/text.hpp"

namespace coursekb {

namespace {

constexpr std::string_view kRestrictedTemplate = R"tmpl(You're VidyaRANG. An AI assistant developed by members of AIGurukul to help students learn their course material via conversations.
The following is a friendly conversation between a user and an AI assistant to answer questions related to the query.
The assistant is talkative and provides lots of specific details from its context only.
Here are the relevant documents for the context:

{context}

Instruction: Based on the above context, provide a crisp answer IN THE USER'S LANGUAGE with logical formation of paragraphs for the user question below.
Strict Instruction: Answer "I don't know." if information is not present in context. Also, decline to answer questions that are not related to context."

{question}
)tmpl";

constexpr std::string_view kRelaxedTemplate = R"tmpl(You're an AI assistant to help students learn their course material via conversations.
The following is a friendly conversation between a user and an AI assistant to answer questions related to the query.
The assistant is talkative and provides lots of specific details in the form of bullet points or short paras from the context.
Here is the relevant context:

{context}

Instruction: Based on the above context, provide a detailed answer IN THE USER'S LANGUAGE with the logical formation of paragraphs for the user question below.

{question}
)tmpl";

constexpr std::string_view kMedicalTemplate = R"tmpl(You’re an AI assistant designed to help students learn their medical course material through conversations. The following is a professional conversation between a user and an AI assistant for answering medical-related questions. The assistant uses precise medical terminologies and provides detailed information in the form of bullet points or short paragraphs from the context. The assistant also emphasizes that the information provided is for educational purposes and advises consulting a licensed healthcare professional for medical advice.

Here is the relevant context:

{context}

Instruction: Based on the above context, provide a detailed answer IN THE USER’S LANGUAGE with the logical formation of paragraphs for the user question below.

{question}

Feel free to provide your specific medical question, and I will respond with a detailed, medically accurate explanation.
)tmpl";

constexpr std::string_view kContextSlot = "{context}";
constexpr std::string_view kQuestionSlot = "{question}";

}  // namespace

std::string_view template_text(PromptMode mode) noexcept {
    switch (mode) {
    case PromptMode::restricted: return kRestrictedTemplate;
    case PromptMode::relaxed: return kRelaxedTemplate;
    case PromptMode::medical: return kMedicalTemplate;
    }
    return kRestrictedTemplate;
}

std::string_view mode_name(PromptMode mode) noexcept {
    switch (mode) {
    case PromptMode::restricted: return "restricted";
    case PromptMode::relaxed: return "relaxed";
    case PromptMode::medical: return "medical";
    }
    return "restricted";
}

PromptMode parse_mode(std::string_view name) {
    const auto lower = text::to_lower_ascii(name);
    if (lower == "restricted") return PromptMode::restricted;
    if (lower == "relaxed") return PromptMode::relaxed;
    if (lower == "medical") return PromptMode::medical;
    fail(ErrorCode::unknown_mode, "unknown prompt mode '" + std::string(name) + "'");
}

std::string join_context(std::span<const Chunk> context_chunks) {
    std::string out;
    for (const auto& c : context_chunks) {
        if (!out.empty()) out += "\n\n";
        out += c.text;
    }
    return out;
}

std::string render_prompt(PromptMode mode, std::span<const Chunk> context_chunks, std::string_view question) {
    if (text::trim(question).empty()) fail(ErrorCode::empty_query, "question is empty");
    if (context_chunks.empty() && mode != PromptMode::restricted) {
        fail(ErrorCode::invalid_argument, "only restricted mode may render without context");
    }
    const auto tmpl = template_text(mode);
    const auto context = join_context(context_chunks);

    // Single left-to-right pass so substituted text is never rescanned.
    std::string out;
    out.reserve(tmpl.size() + context.size() + question.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        if (tmpl.substr(pos).starts_with(kContextSlot)) {
            out += context;
            pos += kContextSlot.size();
        } else if (tmpl.substr(pos).starts_with(kQuestionSlot)) {
            out += question;
            pos += kQuestionSlot.size();
        } else {
            out.push_back(tmpl[pos++]);
        }
    }
    return out;
}

}  // namespace coursekb
