#include "mms/chat.hpp"

#include <algorithm>
#include <set>

#include "mms/errors.hpp"
#include "mms/text.hpp"

#include "http_util.hpp"

namespace mms {

using nlohmann::json;

namespace {

long ws_token_count(const std::string& s) {
    return static_cast<long>(text::whitespace_tokens(s).size());
}

ChatUsage mock_usage(const ChatRequest& request, const std::string& reply) {
    ChatUsage usage;
    for (const auto& message : request.messages) {
        usage.prompt_tokens += ws_token_count(message.content);
    }
    usage.completion_tokens = ws_token_count(reply);
    return usage;
}

} // namespace

HttpChatClient::HttpChatClient(std::string url, std::string key)
    : url_(std::move(url)), key_(std::move(key)) {
    if (url_.empty()) throw ArgumentError("HttpChatClient requires a URL");
}

std::unique_ptr<HttpChatClient> HttpChatClient::from_env() {
    std::string url = detail::env_or_empty("MMS_CHAT_URL");
    if (url.empty()) {
        throw ArgumentError("MMS_CHAT_URL is not set; the http chat backend needs an endpoint");
    }
    return std::make_unique<HttpChatClient>(std::move(url), detail::env_or_empty("MMS_CHAT_KEY"));
}

std::string HttpChatClient::name() const {
    return "http";
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& message : request.messages) {
        messages.push_back({{"role", message.role}, {"content", message.content}});
    }
    json body{{"model", request.model}, {"temperature", request.temperature},
              {"messages", messages}};
    // Retry stays in extract/generate, which own the retry budget.
    json reply = detail::post_json(url_, key_, body, 1, "chat");
    ChatResponse response;
    if (!reply.contains("text") || !reply["text"].is_string()) {
        throw TransportError("chat response missing 'text' field");
    }
    response.text = reply["text"].get<std::string>();
    if (reply.contains("usage")) {
        const auto& usage = reply["usage"];
        response.usage.prompt_tokens = usage.value("prompt_tokens", 0L);
        response.usage.completion_tokens = usage.value("completion_tokens", 0L);
    }
    return response;
}

ChatResponse EchoChatClient::complete(const ChatRequest& request) {
    std::string last_user;
    for (const auto& message : request.messages) {
        if (message.role == "user") last_user = message.content;
    }
    ChatResponse response;
    response.text = last_user;
    response.usage = mock_usage(request, response.text);
    response.reported_latency = 0.0;
    return response;
}

FixedChatClient::FixedChatClient(std::string reply, ChatUsage usage, double latency)
    : text_(std::move(reply)), usage_(usage), latency_(latency) {}

ChatResponse FixedChatClient::complete(const ChatRequest& request) {
    ChatResponse response;
    response.text = text_;
    response.usage = usage_.prompt_tokens == 0 && usage_.completion_tokens == 0
                         ? mock_usage(request, response.text)
                         : usage_;
    response.reported_latency = latency_;
    return response;
}

namespace {

// Pulls the MEMORIES/QUESTION sections out of a rendered answer prompt. When
// the markers are absent, the last non-empty line is treated as the question
// and everything above it as context.
struct PromptParts {
    std::string context;
    std::string question;
};

PromptParts split_answer_prompt(const std::string& prompt) {
    PromptParts parts;
    const std::string question_marker = "QUESTION:";
    const auto q_pos = prompt.rfind(question_marker);
    if (q_pos != std::string::npos) {
        std::string after = prompt.substr(q_pos + question_marker.size());
        const auto blank = after.find("\n\n");
        parts.question = text::trim(blank == std::string::npos ? after : after.substr(0, blank));
        parts.context = prompt.substr(0, q_pos);
        const std::string memories_marker = "MEMORIES:";
        const auto m_pos = parts.context.find(memories_marker);
        if (m_pos != std::string::npos) {
            parts.context = parts.context.substr(m_pos + memories_marker.size());
        }
        return parts;
    }
    const auto lines_end = prompt.find_last_not_of(" \t\n");
    if (lines_end == std::string::npos) return parts;
    const auto last_line_start = prompt.rfind('\n', lines_end);
    if (last_line_start == std::string::npos) {
        parts.question = text::trim(prompt);
        return parts;
    }
    parts.question = text::trim(prompt.substr(last_line_start + 1));
    parts.context = prompt.substr(0, last_line_start);
    return parts;
}

bool is_structural_line(const std::string& line) {
    static const char* kPrefixes[] = {"KEYWORDS:", "DIALOGUE:", "PERSPECTIVES:",
                                      "EVENTS:",   "FACTS:",    "MEMORY "};
    for (const char* prefix : kPrefixes) {
        if (line.rfind(prefix, 0) == 0) return true;
    }
    return false;
}

// Function words carry no signal for overlap scoring; without this filter
// every sentence containing "the" would beat the refusal fallback.
bool is_function_word(const std::string& token) {
    static const std::set<std::string> kFunctionWords = {
        "a",   "an",  "and", "are",  "at",   "did",  "do",   "does", "for", "from",
        "how", "in",  "is",  "it",   "of",   "on",   "or",   "s",    "the", "to",
        "was", "were", "what", "when", "where", "which", "who", "whom", "why", "with"};
    return kFunctionWords.count(token) > 0;
}

} // namespace

ChatResponse ExtractiveChatClient::complete(const ChatRequest& request) {
    std::string prompt;
    for (const auto& message : request.messages) {
        if (message.role == "user") {
            if (!prompt.empty()) prompt.push_back('\n');
            prompt += message.content;
        }
    }
    const PromptParts parts = split_answer_prompt(prompt);

    std::set<std::string> question_tokens;
    for (const auto& tok : text::alnum_tokens(parts.question)) {
        if (!is_function_word(tok)) question_tokens.insert(tok);
    }

    std::string best_sentence;
    std::size_t best_overlap = 0;
    std::string line;
    for (std::size_t pos = 0; pos <= parts.context.size(); ++pos) {
        if (pos == parts.context.size() || parts.context[pos] == '\n') {
            std::string trimmed = text::trim(line);
            line.clear();
            if (trimmed.empty() || is_structural_line(trimmed)) continue;
            for (const auto& sentence : text::split_sentences(trimmed)) {
                std::size_t overlap = 0;
                std::set<std::string> seen;
                for (const auto& tok : text::alnum_tokens(sentence)) {
                    if (question_tokens.count(tok) && seen.insert(tok).second) ++overlap;
                }
                if (overlap > best_overlap) {
                    best_overlap = overlap;
                    best_sentence = sentence;
                }
            }
        } else {
            line.push_back(parts.context[pos]);
        }
    }

    ChatResponse response;
    response.text = best_overlap > 0 ? best_sentence : "I don't know.";
    response.usage = mock_usage(request, response.text);
    response.reported_latency = 0.0;
    return response;
}

ChatResponse RecordingChatClient::complete(const ChatRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        requests_.push_back(request);
    }
    return inner_.complete(request);
}

std::vector<ChatRequest> RecordingChatClient::requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
}

} // namespace mms
