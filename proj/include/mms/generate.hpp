#pragma once

#include <string>

#include "mms/chat.hpp"
#include "mms/extract.hpp"

namespace mms {

struct AnswerResult {
    std::string text;
    UsageRecord usage;
};

std::string render_answer_prompt(const std::string& question, const std::string& context,
                                 const std::string& template_id = "answer/v1");

// R = LLM(context, Q). Renders the answer template (memories first, then the
// question, instruction to answer concisely from memory only), sends it to
// the chat backend, returns the model text and its reported usage. Transport
// failures are retried up to max_retries; an empty model reply throws
// EmptyAnswerError.
AnswerResult answer(const std::string& question, const std::string& context, ChatClient& chat,
                    double temperature = 0.7, const std::string& model = "",
                    const std::string& template_id = "answer/v1", int max_retries = 3);

} // namespace mms
