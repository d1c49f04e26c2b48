#pragma once

#include <string>
#include <utility>

#include "mms/chat.hpp"
#include "mms/types.hpp"

namespace mms {

struct UsageRecord {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    double wall_latency = 0.0; // seconds

    long total_tokens() const { return prompt_tokens + completion_tokens; }
};

enum class ExtractorKind { ChatModel, Deterministic };

// Descriptor plus transport handle for fragment extraction. The Deterministic
// kind ignores the chat fields; ChatModel requires a non-null client.
struct ExtractorBackend {
    ExtractorKind kind = ExtractorKind::Deterministic;
    std::string model_name;
    double temperature = 0.5; // memory-generation default
    std::string prompt_template_id = "extract/v1";
    ChatClient* chat = nullptr;
    int max_retries = 3;

    std::string describe() const;
};

// Versioned prompt template registry. Throws ArgumentError for unknown ids.
const std::string& prompt_template(const std::string& id);

std::string render_extraction_prompt(const DialogueRound& round, const std::string& template_id);

// Pure function of the round content. Rules:
//   keywords     top-10 non-stopword lowercase tokens, frequency then alphabetical
//   perspectives 3 fixed-template rewrites (summary, first-person, topic)
//   episodic     one sentence per turn containing an event verb, "SPEAKER did X [time]"
//   semantic     subject-predicate-object strings from "named"/"is"/"has" patterns
FragmentSet extract_deterministic(const DialogueRound& round);

// Lenient parse of model output: strips code fences and surrounding prose,
// accepts a JSON object with keys keywords/perspectives/events/facts, treats
// missing keys as empty lists. Throws ExtractionParseError (carrying the raw
// text) when no JSON object can be found.
FragmentSet parse_extractor_output(const std::string& raw);

// Converts one short-term round into long-term fragments. ChatModel transport
// failures are retried up to backend.max_retries times; the usage record
// carries backend-reported tokens and backend-reported latency when present
// (measured wall time otherwise).
std::pair<FragmentSet, UsageRecord> extract_fragments(const DialogueRound& round,
                                                      const ExtractorBackend& backend);

} // namespace mms
