#include "mms/generate.hpp"

#include <algorithm>
#include <chrono>

#include "mms/errors.hpp"
#include "mms/text.hpp"

namespace mms {

std::string render_answer_prompt(const std::string& question, const std::string& context,
                                 const std::string& template_id) {
    std::string rendered = prompt_template(template_id);
    const auto replace = [&rendered](const std::string& key, const std::string& value) {
        const std::string needle = "{" + key + "}";
        const auto pos = rendered.find(needle);
        if (pos != std::string::npos) rendered.replace(pos, needle.size(), value);
    };
    replace("context", context);
    replace("question", question);
    return rendered;
}

AnswerResult answer(const std::string& question, const std::string& context, ChatClient& chat,
                    double temperature, const std::string& model, const std::string& template_id,
                    int max_retries) {
    const auto started = std::chrono::steady_clock::now();

    ChatRequest request;
    request.model = model;
    request.temperature = temperature;
    request.messages.push_back({"user", render_answer_prompt(question, context, template_id)});

    ChatResponse response;
    std::string last_error;
    bool ok = false;
    const int attempts = std::max(1, max_retries);
    for (int attempt = 0; attempt < attempts && !ok; ++attempt) {
        try {
            response = chat.complete(request);
            ok = true;
        } catch (const TransportError& e) {
            last_error = e.what();
        }
    }
    if (!ok) {
        throw TransportError("answer generation failed after " + std::to_string(attempts) +
                             " attempts: " + last_error);
    }
    if (text::trim(response.text).empty()) {
        throw EmptyAnswerError("chat backend returned an empty answer");
    }

    AnswerResult result;
    result.text = response.text;
    result.usage.prompt_tokens = response.usage.prompt_tokens;
    result.usage.completion_tokens = response.usage.completion_tokens;
    result.usage.wall_latency =
        response.reported_latency >= 0.0
            ? response.reported_latency
            : std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

} // namespace mms
