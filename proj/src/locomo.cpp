#include "mms/locomo.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mms/errors.hpp"
#include "mms/text.hpp"

namespace mms {

using nlohmann::json;

namespace {

std::optional<QueryCategory> category_from_code(int code) {
    // Dataset convention: 1 multi-hop, 2 temporal, 3 open-domain, 4 single-hop,
    // 5 adversarial.
    switch (code) {
        case 1: return QueryCategory::MultiHop;
        case 2: return QueryCategory::Temporal;
        case 3: return QueryCategory::OpenDomain;
        case 4: return QueryCategory::SingleHop;
        case 5: return QueryCategory::Adversarial;
        default: return std::nullopt;
    }
}

std::optional<int> month_number(const std::string& name) {
    static const std::map<std::string, int> kMonths = {
        {"january", 1},  {"february", 2}, {"march", 3},     {"april", 4},
        {"may", 5},      {"june", 6},     {"july", 7},      {"august", 8},
        {"september", 9}, {"october", 10}, {"november", 11}, {"december", 12}};
    const auto it = kMonths.find(text::to_lower(name));
    if (it == kMonths.end()) return std::nullopt;
    return it->second;
}

// Accepts ISO-8601 as-is and converts the dataset's "1:56 pm on 8 May, 2023"
// style; anything else is dropped.
std::optional<std::string> to_iso_timestamp(const std::string& raw) {
    const std::string trimmed = text::trim(raw);
    if (trimmed.empty()) return std::nullopt;
    static const std::regex kIso(R"(^\d{4}-\d{2}-\d{2}([T ].*)?$)");
    if (std::regex_match(trimmed, kIso)) return trimmed;

    static const std::regex kLocomo(
        R"((\d{1,2}):(\d{2})\s*(am|pm)\s+on\s+(\d{1,2})\s+([A-Za-z]+),?\s*(\d{4}))",
        std::regex::icase);
    std::smatch m;
    if (!std::regex_search(trimmed, m, kLocomo)) return std::nullopt;
    int hour = std::stoi(m[1].str());
    const int minute = std::stoi(m[2].str());
    const std::string half = text::to_lower(m[3].str());
    if (half == "pm" && hour != 12) hour += 12;
    if (half == "am" && hour == 12) hour = 0;
    const int day = std::stoi(m[4].str());
    const auto month = month_number(m[5].str());
    if (!month) return std::nullopt;
    const int year = std::stoi(m[6].str());
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02dT%02d:%02d:00", year, *month, day, hour,
                  minute);
    return std::string(buffer);
}

struct SessionRef {
    int number;
    std::string key;
};

std::vector<SessionRef> session_keys(const json& conversation) {
    static const std::regex kSession(R"(^session_(\d+)$)");
    std::vector<SessionRef> refs;
    for (const auto& [key, value] : conversation.items()) {
        std::smatch m;
        if (std::regex_match(key, m, kSession) && value.is_array()) {
            refs.push_back(SessionRef{std::stoi(m[1].str()), key});
        }
    }
    std::sort(refs.begin(), refs.end(),
              [](const SessionRef& a, const SessionRef& b) { return a.number < b.number; });
    return refs;
}

std::string string_or_dump(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    return value.dump();
}

} // namespace

LocomoCorpus load_locomo(const std::filesystem::path& path, std::size_t window) {
    if (window < 1) throw ArgumentError("round window must be >= 1");

    std::ifstream in(path);
    if (!in) throw CorpusLoadError("cannot open corpus file " + path.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw CorpusLoadError("corpus file " + path.string() + " is not valid JSON: " + e.what());
    }

    json samples = json::array();
    if (root.is_array()) samples = root;
    else if (root.is_object()) samples.push_back(root);
    else throw CorpusLoadError("corpus root must be an object or an array of conversations");

    LocomoCorpus corpus;
    corpus.conversation_count = samples.size();

    std::size_t sample_index = 0;
    for (const auto& sample : samples) {
        ++sample_index;
        const std::string sample_id =
            sample.contains("sample_id") ? string_or_dump(sample.at("sample_id"))
                                         : "conv-" + std::to_string(sample_index);
        if (!sample.contains("conversation") || !sample.at("conversation").is_object()) {
            throw CorpusLoadError("conversation '" + sample_id + "' has no session object");
        }
        const json& conversation = sample.at("conversation");

        for (const auto& ref : session_keys(conversation)) {
            ++corpus.session_count;
            const std::string session_id = sample_id + "/" + ref.key;
            const json& turns_json = conversation.at(ref.key);

            std::optional<std::string> timestamp;
            const std::string dt_key = ref.key + "_date_time";
            if (conversation.contains(dt_key) && conversation.at(dt_key).is_string()) {
                timestamp = to_iso_timestamp(conversation.at(dt_key).get<std::string>());
            }

            std::vector<DialogueTurn> turns;
            std::set<std::string> seen_ids;
            for (const auto& turn_json : turns_json) {
                DialogueTurn turn;
                turn.speaker = turn_json.value("speaker", "");
                turn.text = turn_json.value("text", "");
                turn.turn_id = turn_json.value("dia_id", "");
                if (turn.turn_id.empty()) {
                    throw CorpusLoadError("session '" + session_id + "' has a turn without dia_id");
                }
                if (!seen_ids.insert(turn.turn_id).second) {
                    throw CorpusLoadError("session '" + session_id + "' repeats dia_id '" +
                                          turn.turn_id + "'");
                }
                turns.push_back(std::move(turn));
            }

            std::size_t chunk = 0;
            for (std::size_t offset = 0; offset < turns.size(); offset += window, ++chunk) {
                DialogueRound round;
                char suffix[16];
                std::snprintf(suffix, sizeof(suffix), "r%03zu", chunk);
                round.round_id = session_id + "/" + suffix;
                round.session_id = session_id;
                round.timestamp = timestamp;
                const std::size_t end = std::min(offset + window, turns.size());
                round.turns.assign(turns.begin() + static_cast<std::ptrdiff_t>(offset),
                                   turns.begin() + static_cast<std::ptrdiff_t>(end));
                corpus.rounds.push_back(std::move(round));
            }
        }

        if (!sample.contains("qa")) continue;
        std::size_t qa_index = 0;
        for (const auto& entry : sample.at("qa")) {
            ++qa_index;
            EvalQuery query;
            query.query_id = sample_id + "/q" + std::to_string(qa_index);
            query.question = entry.value("question", "");
            if (text::trim(query.question).empty()) {
                throw CorpusLoadError("qa entry " + query.query_id + " has an empty question");
            }
            if (entry.contains("answer")) query.gold_answer = string_or_dump(entry.at("answer"));
            else if (entry.contains("adversarial_answer")) {
                query.gold_answer = string_or_dump(entry.at("adversarial_answer"));
            }

            if (entry.contains("evidence") && entry.at("evidence").is_array()) {
                for (const auto& ev : entry.at("evidence")) {
                    query.gold_evidence.insert(string_or_dump(ev));
                }
            }

            std::optional<QueryCategory> category;
            if (entry.contains("category")) {
                const auto& cat = entry.at("category");
                if (cat.is_number_integer()) category = category_from_code(cat.get<int>());
                else if (cat.is_string()) category = category_from_string(cat.get<std::string>());
            }
            if (!category) {
                throw CorpusLoadError("qa entry " + query.query_id +
                                      " has an unknown category: " +
                                      (entry.contains("category") ? entry.at("category").dump()
                                                                  : std::string("<missing>")) +
                                      " (question: " + query.question + ")");
            }
            query.category = *category;
            corpus.queries.push_back(std::move(query));
        }
    }
    return corpus;
}

} // namespace mms
