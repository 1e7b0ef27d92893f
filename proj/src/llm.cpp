// SPDX-License-Identifier: Apache-2.0
#include "coursekb/llm.hpp"

#include "coursekb/error.hpp"
#include "http_util.hpp"

#include <json.hpp>

namespace coursekb {

using nlohmann::json;

HttpLlmClient::HttpLlmClient(std::string endpoint, std::string model, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

ChatResponse HttpLlmClient::chat(const ChatRequest& request) {
    const auto url = detail::split_url(endpoint_);
    if (url.origin.empty()) fail(ErrorCode::llm_unavailable, "LLM endpoint is not an http URL");

    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    const json body = {
        {"model", request.model.empty() ? model_ : request.model},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
    };

    auto client = detail::make_client(url.origin, timeout_seconds_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client->Post(url.path, headers, body.dump(), "application/json");
    if (!res) fail(ErrorCode::llm_unavailable, "LLM endpoint unreachable");
    if (res->status != 200) fail(ErrorCode::llm_unavailable, "LLM endpoint returned HTTP " + std::to_string(res->status));

    try {
        const auto reply = json::parse(res->body);
        if (reply.contains("content")) return {reply.at("content").get<std::string>()};
        return {reply.at("choices").at(0).at("message").at("content").get<std::string>()};
    } catch (const json::exception&) {
        fail(ErrorCode::llm_unavailable, "LLM endpoint sent an unrecognised reply");
    }
}

}  // namespace coursekb
