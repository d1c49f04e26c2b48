#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace mms {

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string content;
};

struct ChatRequest {
    std::string model;
    double temperature = 0.7;
    std::vector<ChatMessage> messages;
};

struct ChatUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    ChatUsage usage;
    // Backend-reported wall time; < 0 means "not reported, measure locally".
    double reported_latency = -1.0;
};

// Chat backends. Implementations must be safe to share across worker threads.
class ChatClient {
public:
    virtual ~ChatClient() = default;

    virtual std::string name() const = 0;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Remote chat model. Wire contract: POST {model, temperature, messages[]} ->
// {text, usage{prompt_tokens, completion_tokens}}; endpoint and key come from
// MMS_CHAT_URL / MMS_CHAT_KEY.
class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(std::string url, std::string key);

    static std::unique_ptr<HttpChatClient> from_env();

    std::string name() const override;
    ChatResponse complete(const ChatRequest& request) override;

private:
    std::string url_;
    std::string key_;
};

// The mock backends below ship in the library so the whole pipeline runs
// offline without credentials. All of them report deterministic usage
// (whitespace token counts) and zero latency unless configured otherwise.

// Replies with the content of the last user message.
class EchoChatClient final : public ChatClient {
public:
    std::string name() const override { return "echo-mock"; }
    ChatResponse complete(const ChatRequest& request) override;
};

// Replies with a fixed string; usage and latency are injectable, which the
// overhead accounting tests rely on.
class FixedChatClient final : public ChatClient {
public:
    explicit FixedChatClient(std::string text, ChatUsage usage = {}, double latency = 0.0);

    std::string name() const override { return "fixed-mock"; }
    ChatResponse complete(const ChatRequest& request) override;

private:
    std::string text_;
    ChatUsage usage_;
    double latency_;
};

// Replies with the sentence from the prompt's MEMORIES section that has the
// highest token overlap with the QUESTION section; ties keep the earliest
// sentence. Falls back to "I don't know." when nothing overlaps.
class ExtractiveChatClient final : public ChatClient {
public:
    std::string name() const override { return "extractive-mock"; }
    ChatResponse complete(const ChatRequest& request) override;
};

// Wraps another client and records every request, for tests that assert on
// the rendered prompt.
class RecordingChatClient final : public ChatClient {
public:
    explicit RecordingChatClient(ChatClient& inner) : inner_(inner) {}

    std::string name() const override { return inner_.name(); }
    ChatResponse complete(const ChatRequest& request) override;

    std::vector<ChatRequest> requests() const;

private:
    ChatClient& inner_;
    mutable std::mutex mutex_;
    std::vector<ChatRequest> requests_;
};

} // namespace mms
