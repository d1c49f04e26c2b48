#include "mms/extract.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <regex>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "mms/errors.hpp"
#include "mms/text.hpp"

namespace mms {

using nlohmann::json;

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> kStopwords = {
        "a",    "about", "after", "all",   "am",    "an",   "and",   "any",  "are",  "as",
        "at",   "be",    "been",  "but",   "by",    "can",  "did",   "do",   "does", "for",
        "from", "get",   "got",   "had",   "has",   "have", "he",    "her",  "hers", "him",
        "his",  "how",   "i",     "if",    "in",    "into", "is",    "it",   "its",  "just",
        "me",   "my",    "no",    "not",   "of",    "on",   "or",    "our",  "out",  "she",
        "so",   "some",  "that",  "the",   "their", "them", "then",  "they", "this", "to",
        "too",  "up",    "us",    "very",  "was",   "we",   "were",  "what", "when", "where",
        "which", "who",  "will",  "with",  "would", "you",  "your"};
    return kStopwords;
}

// Past-tense forms only; the deterministic extractor does no stemming.
const std::unordered_set<std::string>& event_verbs() {
    static const std::unordered_set<std::string> kVerbs = {
        "adopted",  "attended", "baked",     "booked",   "bought",   "built",   "celebrated",
        "cooked",   "displayed", "enrolled", "finished", "graduated", "hiked",  "hosted",
        "joined",   "launched", "learned",   "met",      "moved",    "painted", "planned",
        "planted",  "ran",      "sailed",    "signed",   "sold",     "started", "took",
        "traveled", "visited",  "volunteered", "watched", "went",    "won",     "wrote"};
    return kVerbs;
}

const std::map<std::string, int>& month_numbers() {
    static const std::map<std::string, int> kMonths = {
        {"january", 1}, {"february", 2}, {"march", 3},     {"april", 4},   {"may", 5},
        {"june", 6},    {"july", 7},     {"august", 8},    {"september", 9}, {"october", 10},
        {"november", 11}, {"december", 12}};
    return kMonths;
}

bool is_time_token(const std::string& lower) {
    if (month_numbers().count(lower)) return true;
    static const std::unordered_set<std::string> kOthers = {
        "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
        "today",  "tomorrow", "yesterday"};
    if (kOthers.count(lower)) return true;
    if (lower.size() == 4 && (lower[0] == '1' || lower[0] == '2') &&
        std::all_of(lower.begin(), lower.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return true;
    }
    return false;
}

// First time expression in the sentence, original casing.
std::string find_time_expression(const std::string& sentence) {
    std::string current;
    for (std::size_t i = 0; i <= sentence.size(); ++i) {
        const bool boundary =
            i == sentence.size() || !(std::isalnum(static_cast<unsigned char>(sentence[i])));
        if (boundary) {
            if (!current.empty() && is_time_token(text::to_lower(current))) return current;
            current.clear();
        } else {
            current.push_back(sentence[i]);
        }
    }
    return {};
}

std::vector<std::string> collect_keywords(const DialogueRound& round) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& turn : round.turns) {
        for (const auto& tok : text::alnum_tokens(turn.text)) {
            if (stopwords().count(tok)) continue;
            ++counts[tok];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> keywords;
    for (const auto& [tok, count] : ranked) {
        if (keywords.size() == 10) break;
        keywords.push_back(tok);
    }
    return keywords;
}

std::vector<std::string> unique_speakers(const DialogueRound& round) {
    std::vector<std::string> speakers;
    for (const auto& turn : round.turns) {
        if (std::find(speakers.begin(), speakers.end(), turn.speaker) == speakers.end()) {
            speakers.push_back(turn.speaker);
        }
    }
    return speakers;
}

std::string speakers_phrase(const std::vector<std::string>& speakers) {
    if (speakers.empty()) return "The participants";
    if (speakers.size() == 1) return speakers[0];
    std::string out = speakers[0];
    for (std::size_t i = 1; i + 1 < speakers.size(); ++i) out += ", " + speakers[i];
    out += " and " + speakers.back();
    return out;
}

// Three fixed-template rewrites: factual summary, first-person intent, topic
// category. Deterministic so fixtures can freeze the output.
std::vector<std::string> build_perspectives(const DialogueRound& round,
                                            const std::vector<std::string>& keywords) {
    std::vector<std::string> perspectives;
    const auto speakers = unique_speakers(round);
    const std::string who = speakers_phrase(speakers);

    std::vector<std::string> top;
    for (std::size_t i = 0; i < keywords.size() && i < 3; ++i) top.push_back(keywords[i]);
    perspectives.push_back(top.empty()
                               ? who + " discussed everyday matters."
                               : who + " discussed " + text::join(top, ", ") + ".");

    std::string first_sentence;
    std::string first_speaker = speakers.empty() ? std::string("Speaker") : speakers.front();
    for (const auto& turn : round.turns) {
        if (turn.speaker != first_speaker) continue;
        auto sentences = text::split_sentences(turn.text);
        if (!sentences.empty()) {
            first_sentence = sentences.front();
            break;
        }
    }
    perspectives.push_back(first_sentence.empty()
                               ? "From " + first_speaker + "'s point of view the exchange was brief."
                               : "From " + first_speaker + "'s point of view: " + first_sentence +
                                     ".");

    perspectives.push_back(keywords.empty()
                               ? "The main topic of this conversation is small talk."
                               : "The main topic of this conversation is " + keywords.front() +
                                     ".");
    return perspectives;
}

std::vector<std::string> build_episodic(const DialogueRound& round) {
    std::vector<std::string> events;
    for (const auto& turn : round.turns) {
        for (const auto& sentence : text::split_sentences(turn.text)) {
            const auto tokens = text::alnum_tokens(sentence);
            const bool has_event =
                std::any_of(tokens.begin(), tokens.end(),
                            [](const std::string& tok) { return event_verbs().count(tok) > 0; });
            if (!has_event) continue;

            std::string body = sentence;
            const auto words = text::whitespace_tokens(sentence);
            std::string rendered;
            if (!words.empty() && (words.front() == "I" || words.front() == "We")) {
                body = text::trim(sentence.substr(words.front().size()));
                rendered = turn.speaker + " " + body;
            } else {
                rendered = turn.speaker + " mentioned: " + sentence;
            }
            std::string when = find_time_expression(sentence);
            if (when.empty() && round.timestamp) {
                when = round.timestamp->substr(0, round.timestamp->find('T'));
            }
            if (!when.empty()) rendered += " [" + when + "]";
            events.push_back(rendered);
            break; // one event sentence per turn
        }
    }
    return events;
}

// "I"/"my" resolve to the turn's speaker.
std::vector<std::string> build_semantic(const DialogueRound& round) {
    static const std::regex kNamed(R"(([A-Za-z]+)\s+named\s+([A-Za-z][A-Za-z0-9']*))");
    static const std::regex kMyIs(R"(\bmy\s+([a-z][a-z ]*?)\s+is\s+([^,.!?]+))",
                                  std::regex::icase);
    static const std::regex kIAm(R"(\bI\s+am\s+([^,.!?]+))");
    static const std::regex kIHave(R"(\bI\s+have\s+([^,.!?]+))");
    static const std::regex kIWorkLive(R"(\bI\s+(work|live)\s+(at|in|for|near)\s+([^,.!?]+))");
    static const std::regex kProperIs(R"(\b([A-Z][a-z]+)\s+is\s+([^,.!?]+))");
    static const std::unordered_set<std::string> kPronouns = {
        "i", "he", "she", "it", "they", "we", "you", "there", "that", "this", "the"};

    std::vector<std::string> facts;
    auto add = [&facts](std::string fact) {
        fact = text::trim(fact);
        if (fact.empty()) return;
        if (std::find(facts.begin(), facts.end(), fact) == facts.end()) facts.push_back(fact);
    };

    for (const auto& turn : round.turns) {
        const std::string& s = turn.text;
        std::smatch m;

        auto begin = std::sregex_iterator(s.begin(), s.end(), kNamed);
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            std::string noun = text::to_lower((*it)[1].str());
            if (stopwords().count(noun) || kPronouns.count(noun)) continue;
            add(turn.speaker + " has a " + noun + " named " + (*it)[2].str());
        }
        for (auto it = std::sregex_iterator(s.begin(), s.end(), kMyIs);
             it != std::sregex_iterator(); ++it) {
            add(turn.speaker + "'s " + text::to_lower((*it)[1].str()) + " is " +
                text::trim((*it)[2].str()));
        }
        for (auto it = std::sregex_iterator(s.begin(), s.end(), kIAm);
             it != std::sregex_iterator(); ++it) {
            add(turn.speaker + " is " + text::trim((*it)[1].str()));
        }
        for (auto it = std::sregex_iterator(s.begin(), s.end(), kIHave);
             it != std::sregex_iterator(); ++it) {
            add(turn.speaker + " has " + text::trim((*it)[1].str()));
        }
        for (auto it = std::sregex_iterator(s.begin(), s.end(), kIWorkLive);
             it != std::sregex_iterator(); ++it) {
            add(turn.speaker + " " + (*it)[1].str() + "s " + (*it)[2].str() + " " +
                text::trim((*it)[3].str()));
        }
        for (auto it = std::sregex_iterator(s.begin(), s.end(), kProperIs);
             it != std::sregex_iterator(); ++it) {
            std::string subject = (*it)[1].str();
            if (kPronouns.count(text::to_lower(subject))) continue;
            add(subject + " is " + text::trim((*it)[2].str()));
        }
    }
    return facts;
}

DialogueRound drop_empty_turns(const DialogueRound& round) {
    DialogueRound cleaned = round;
    cleaned.turns.clear();
    for (const auto& turn : round.turns) {
        if (!text::trim(turn.text).empty()) cleaned.turns.push_back(turn);
    }
    return cleaned;
}

const std::map<std::string, std::string>& template_registry() {
    static const std::map<std::string, std::string> kTemplates = {
        {"extract/v1",
         "Analyze the dialogue below and produce long-term memory fragments.\n"
         "Return one JSON object with exactly these keys:\n"
         "  \"keywords\": up to 10 important words or short phrases,\n"
         "  \"perspectives\": exactly 3 alternative viewpoints on the dialogue, each a short"
         " paragraph,\n"
         "  \"events\": one sentence per concrete event, stating who did what and when,\n"
         "  \"facts\": standalone factual knowledge points in subject-predicate-object form.\n"
         "\n"
         "DIALOGUE:\n"
         "{dialogue}\n"},
        {"answer/v1",
         "Answer the question using only the memories below. If the memories do not contain"
         " the answer, reply \"I don't know.\"\n"
         "\n"
         "MEMORIES:\n"
         "{context}\n"
         "\n"
         "QUESTION:\n"
         "{question}\n"
         "\n"
         "Answer concisely.\n"}};
    return kTemplates;
}

std::string replace_placeholder(std::string tpl, const std::string& key,
                                const std::string& value) {
    const std::string needle = "{" + key + "}";
    const auto pos = tpl.find(needle);
    if (pos != std::string::npos) tpl.replace(pos, needle.size(), value);
    return tpl;
}

// Balanced-brace scan that is aware of JSON string literals, so fenced or
// prose-wrapped objects are still found.
std::string first_json_object(const std::string& raw) {
    for (std::size_t start = 0; start < raw.size(); ++start) {
        if (raw[start] != '{') continue;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                --depth;
                if (depth == 0) return raw.substr(start, i - start + 1);
            }
        }
    }
    return {};
}

std::vector<std::string> string_list(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    const auto& value = j.at(key);
    std::vector<std::string> out;
    if (value.is_string()) {
        out.push_back(value.get<std::string>());
    } else if (value.is_array()) {
        for (const auto& item : value) {
            if (item.is_string()) out.push_back(item.get<std::string>());
            else out.push_back(item.dump());
        }
    }
    return out;
}

} // namespace

std::string ExtractorBackend::describe() const {
    if (kind == ExtractorKind::Deterministic) return "deterministic";
    return "chat:" + (model_name.empty() ? std::string("default") : model_name);
}

const std::string& prompt_template(const std::string& id) {
    const auto& registry = template_registry();
    const auto it = registry.find(id);
    if (it == registry.end()) throw ArgumentError("unknown prompt template '" + id + "'");
    return it->second;
}

std::string render_extraction_prompt(const DialogueRound& round, const std::string& template_id) {
    return replace_placeholder(prompt_template(template_id), "dialogue", round_text(round));
}

FragmentSet extract_deterministic(const DialogueRound& round) {
    const DialogueRound cleaned = drop_empty_turns(round);
    FragmentSet fs;
    if (cleaned.turns.empty()) return fs;
    fs.keywords = collect_keywords(cleaned);
    fs.cognitive_perspectives = build_perspectives(cleaned, fs.keywords);
    fs.episodic = build_episodic(cleaned);
    fs.semantic = build_semantic(cleaned);
    return normalize_fragments(std::move(fs));
}

FragmentSet parse_extractor_output(const std::string& raw) {
    const std::string object_text = first_json_object(raw);
    if (object_text.empty()) {
        throw ExtractionParseError("extractor output contains no JSON object", raw);
    }
    json parsed;
    try {
        parsed = json::parse(object_text);
    } catch (const json::exception& e) {
        throw ExtractionParseError(std::string("extractor output is not valid JSON: ") + e.what(),
                                   raw);
    }
    if (!parsed.is_object()) {
        throw ExtractionParseError("extractor output JSON is not an object", raw);
    }
    FragmentSet fs;
    fs.keywords = string_list(parsed, "keywords");
    fs.cognitive_perspectives = string_list(parsed, "perspectives");
    fs.episodic = string_list(parsed, "events");
    fs.semantic = string_list(parsed, "facts");
    return normalize_fragments(std::move(fs));
}

std::pair<FragmentSet, UsageRecord> extract_fragments(const DialogueRound& round,
                                                      const ExtractorBackend& backend) {
    validate_round(round);
    const auto started = std::chrono::steady_clock::now();
    auto elapsed_seconds = [&started]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    if (backend.kind == ExtractorKind::Deterministic) {
        FragmentSet fs = extract_deterministic(round);
        UsageRecord usage;
        usage.wall_latency = elapsed_seconds();
        return {std::move(fs), usage};
    }

    if (backend.chat == nullptr) {
        throw ArgumentError("ChatModel extractor requires a chat client");
    }
    ChatRequest request;
    request.model = backend.model_name;
    request.temperature = backend.temperature;
    request.messages.push_back(
        {"system",
         "You are the memory module of a conversational agent. You turn raw dialogue into"
         " structured memory fragments. Respond with a single JSON object and nothing else."});
    request.messages.push_back({"user", render_extraction_prompt(round, backend.prompt_template_id)});

    ChatResponse response;
    std::string last_error;
    bool ok = false;
    const int attempts = std::max(1, backend.max_retries);
    for (int attempt = 0; attempt < attempts && !ok; ++attempt) {
        try {
            response = backend.chat->complete(request);
            ok = true;
        } catch (const TransportError& e) {
            last_error = e.what();
        }
    }
    if (!ok) {
        throw TransportError("extraction failed after " + std::to_string(attempts) +
                             " attempts: " + last_error);
    }

    FragmentSet fs = parse_extractor_output(response.text);
    UsageRecord usage;
    usage.prompt_tokens = response.usage.prompt_tokens;
    usage.completion_tokens = response.usage.completion_tokens;
    usage.wall_latency =
        response.reported_latency >= 0.0 ? response.reported_latency : elapsed_seconds();
    return {std::move(fs), usage};
}

} // namespace mms
