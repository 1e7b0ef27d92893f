// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace coursekb {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.2;
};

struct ChatResponse {
    std::string content;
};

/// Chat-completion client. Implementations throw Error(llm_unavailable) on
/// transport or protocol failure and must tolerate concurrent calls.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual ChatResponse chat(const ChatRequest& request) = 0;
    virtual std::string model_id() const = 0;
};

/// POST <endpoint> {model, messages:[{role, content}], temperature} -> {content}.
/// Also accepts the OpenAI-style {choices:[{message:{content}}]} reply shape.
/// The API key is sent as a bearer token and never logged.
class HttpLlmClient : public LlmClient {
public:
    HttpLlmClient(std::string endpoint, std::string model, std::string api_key = {}, int timeout_seconds = 60);
    ChatResponse chat(const ChatRequest& request) override;
    std::string model_id() const override { return model_; }

private:
    std::string endpoint_;
    std::string model_;
    std::string api_key_;
    int timeout_seconds_;
};

}  // namespace coursekb
