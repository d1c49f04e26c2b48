#include "mms/types.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "mms/errors.hpp"
#include "mms/hash.hpp"
#include "mms/text.hpp"

namespace mms {

using nlohmann::json;

std::string fragment_id(Fragment kind) {
    switch (kind) {
        case Fragment::Key: return "key";
        case Fragment::Short: return "short";
        case Fragment::Cog: return "cog";
        case Fragment::Epi: return "epi";
        case Fragment::Sem: return "sem";
    }
    return "key";
}

std::string fragment_label(Fragment kind) {
    switch (kind) {
        case Fragment::Key: return "KEYWORDS:";
        case Fragment::Short: return "DIALOGUE:";
        case Fragment::Cog: return "PERSPECTIVES:";
        case Fragment::Epi: return "EVENTS:";
        case Fragment::Sem: return "FACTS:";
    }
    return "KEYWORDS:";
}

void validate_round(const DialogueRound& round) {
    if (round.round_id.empty()) throw ArgumentError("dialogue round has empty round_id");
    if (round.session_id.empty()) throw ArgumentError("dialogue round has empty session_id");
    if (round.turns.empty()) {
        throw ArgumentError("dialogue round '" + round.round_id + "' has no turns");
    }
    std::unordered_set<std::string> seen;
    for (const auto& turn : round.turns) {
        if (turn.turn_id.empty()) {
            throw ArgumentError("round '" + round.round_id + "' has a turn with empty turn_id");
        }
        if (!seen.insert(turn.turn_id).second) {
            throw ArgumentError("round '" + round.round_id + "' repeats turn_id '" + turn.turn_id +
                                "'");
        }
    }
}

std::string round_text(const DialogueRound& round) {
    std::vector<std::string> lines;
    lines.reserve(round.turns.size());
    for (const auto& turn : round.turns) {
        if (text::trim(turn.text).empty()) continue;
        lines.push_back(turn.speaker + ": " + text::trim(turn.text));
    }
    return text::join(lines, "\n");
}

FragmentSet normalize_fragments(FragmentSet fs) {
    auto clean = [](std::vector<std::string>& list, bool fold_case) {
        std::vector<std::string> out;
        std::set<std::string> seen;
        for (auto& item : list) {
            std::string trimmed = text::trim(item);
            if (trimmed.empty()) continue;
            std::string key = fold_case ? text::to_lower(trimmed) : trimmed;
            if (!seen.insert(key).second) continue;
            out.push_back(fold_case ? std::move(key) : std::move(trimmed));
        }
        list = std::move(out);
    };
    clean(fs.keywords, /*fold_case=*/true);
    clean(fs.cognitive_perspectives, /*fold_case=*/false);
    clean(fs.episodic, /*fold_case=*/false);
    clean(fs.semantic, /*fold_case=*/false);
    return fs;
}

std::string make_record_id(const std::string& session_id, const std::string& round_id) {
    std::string material = session_id;
    material.push_back('\x1f');
    material.append(round_id);
    return hex64(fnv1a64(material));
}

LongTermRecord make_record(DialogueRound source, FragmentSet fragments) {
    LongTermRecord record;
    record.record_id = make_record_id(source.session_id, source.round_id);
    record.source = std::move(source);
    record.fragments = std::move(fragments);
    return record;
}

bool UnitComposition::includes(Fragment kind) const {
    switch (kind) {
        case Fragment::Key: return include_key;
        case Fragment::Short: return include_short;
        case Fragment::Cog: return include_cog;
        case Fragment::Epi: return include_epi;
        case Fragment::Sem: return include_sem;
    }
    return false;
}

UnitComposition UnitComposition::retrieval_default() {
    return UnitComposition{true, true, true, true, false};
}

UnitComposition UnitComposition::contextual_default() {
    return UnitComposition{true, true, true, false, true};
}

std::string UnitComposition::describe() const {
    std::vector<std::string> parts;
    for (Fragment kind : kCanonicalFragmentOrder) {
        if (includes(kind)) parts.push_back(fragment_id(kind));
    }
    return text::join(parts, "+");
}

UnitComposition parse_composition(const std::string& spec) {
    UnitComposition comp;
    std::string token;
    auto apply = [&comp](const std::string& name) {
        std::string id = text::trim(text::to_lower(name));
        if (id.empty()) return;
        if (id == "key") comp.include_key = true;
        else if (id == "short") comp.include_short = true;
        else if (id == "cog") comp.include_cog = true;
        else if (id == "epi") comp.include_epi = true;
        else if (id == "sem") comp.include_sem = true;
        else throw ArgumentError("unknown fragment name '" + id + "' in composition");
    };
    for (char c : spec) {
        if (c == ',' || c == '+') {
            apply(token);
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    apply(token);
    if (!comp.any()) throw ArgumentError("composition '" + spec + "' selects no fragments");
    return comp;
}

namespace {

std::string block_text(const LongTermRecord& record, Fragment kind) {
    switch (kind) {
        case Fragment::Key: return text::join(record.fragments.keywords, ", ");
        case Fragment::Short: return round_text(record.source);
        case Fragment::Cog: return text::join(record.fragments.cognitive_perspectives, "\n");
        case Fragment::Epi: return text::join(record.fragments.episodic, "\n");
        case Fragment::Sem: return text::join(record.fragments.semantic, "\n");
    }
    return {};
}

std::vector<TextView> compose_views(const LongTermRecord& record, const UnitComposition& comp,
                                    const char* what) {
    if (!comp.any()) {
        throw InvalidCompositionError(std::string(what) +
                                      " composition must include at least one fragment");
    }
    std::vector<TextView> views;
    for (Fragment kind : kCanonicalFragmentOrder) {
        if (!comp.includes(kind)) continue;
        views.push_back(TextView{kind, fragment_label(kind), block_text(record, kind)});
    }
    return views;
}

} // namespace

RetrievalUnit compose_retrieval_unit(const LongTermRecord& record, const UnitComposition& comp) {
    return RetrievalUnit{record.record_id, compose_views(record, comp, "retrieval"), comp};
}

ContextualUnit compose_contextual_unit(const LongTermRecord& record, const UnitComposition& comp) {
    return ContextualUnit{record.record_id, compose_views(record, comp, "contextual"), comp};
}

std::string render_view(const TextView& view) {
    return view.label + "\n" + view.text;
}

std::string unit_text(const std::vector<TextView>& views) {
    std::vector<std::string> blocks;
    blocks.reserve(views.size());
    for (const auto& view : views) blocks.push_back(render_view(view));
    return text::join(blocks, "\n\n");
}

std::string category_name(QueryCategory category) {
    switch (category) {
        case QueryCategory::SingleHop: return "SingleHop";
        case QueryCategory::MultiHop: return "MultiHop";
        case QueryCategory::Temporal: return "Temporal";
        case QueryCategory::OpenDomain: return "OpenDomain";
        case QueryCategory::Adversarial: return "Adversarial";
    }
    return "SingleHop";
}

std::optional<QueryCategory> category_from_string(const std::string& name) {
    std::string id;
    for (char c : text::to_lower(name)) {
        if (c != '_' && c != '-' && c != ' ') id.push_back(c);
    }
    if (id == "singlehop") return QueryCategory::SingleHop;
    if (id == "multihop") return QueryCategory::MultiHop;
    if (id == "temporal" || id == "temporalreasoning") return QueryCategory::Temporal;
    if (id == "opendomain" || id == "opendomainknowledge") return QueryCategory::OpenDomain;
    if (id == "adversarial") return QueryCategory::Adversarial;
    return std::nullopt;
}

json to_json(const DialogueRound& round) {
    json turns = json::array();
    for (const auto& turn : round.turns) {
        turns.push_back({{"speaker", turn.speaker}, {"text", turn.text}, {"turn_id", turn.turn_id}});
    }
    json j{{"round_id", round.round_id}, {"session_id", round.session_id}, {"turns", turns}};
    if (round.timestamp) j["timestamp"] = *round.timestamp;
    return j;
}

json to_json(const FragmentSet& fs) {
    return json{{"keywords", fs.keywords},
                {"cognitive_perspectives", fs.cognitive_perspectives},
                {"episodic", fs.episodic},
                {"semantic", fs.semantic}};
}

json to_json(const LongTermRecord& record) {
    return json{{"record_id", record.record_id},
                {"source", to_json(record.source)},
                {"fragments", to_json(record.fragments)}};
}

json to_json(const UnitComposition& comp) {
    return json{{"include_key", comp.include_key},
                {"include_short", comp.include_short},
                {"include_cog", comp.include_cog},
                {"include_epi", comp.include_epi},
                {"include_sem", comp.include_sem}};
}

DialogueRound round_from_json(const json& j) {
    DialogueRound round;
    round.round_id = j.at("round_id").get<std::string>();
    round.session_id = j.at("session_id").get<std::string>();
    for (const auto& turn : j.at("turns")) {
        round.turns.push_back(DialogueTurn{turn.at("speaker").get<std::string>(),
                                           turn.at("text").get<std::string>(),
                                           turn.at("turn_id").get<std::string>()});
    }
    if (j.contains("timestamp")) round.timestamp = j.at("timestamp").get<std::string>();
    return round;
}

FragmentSet fragments_from_json(const json& j) {
    FragmentSet fs;
    fs.keywords = j.at("keywords").get<std::vector<std::string>>();
    fs.cognitive_perspectives = j.at("cognitive_perspectives").get<std::vector<std::string>>();
    fs.episodic = j.at("episodic").get<std::vector<std::string>>();
    fs.semantic = j.at("semantic").get<std::vector<std::string>>();
    return fs;
}

LongTermRecord record_from_json(const json& j) {
    LongTermRecord record;
    record.record_id = j.at("record_id").get<std::string>();
    record.source = round_from_json(j.at("source"));
    record.fragments = fragments_from_json(j.at("fragments"));
    return record;
}

UnitComposition composition_from_json(const json& j) {
    UnitComposition comp;
    comp.include_key = j.at("include_key").get<bool>();
    comp.include_short = j.at("include_short").get<bool>();
    comp.include_cog = j.at("include_cog").get<bool>();
    comp.include_epi = j.at("include_epi").get<bool>();
    comp.include_sem = j.at("include_sem").get<bool>();
    return comp;
}

std::string to_jsonl_line(const LongTermRecord& record) {
    return to_json(record).dump();
}

LongTermRecord record_from_jsonl_line(const std::string& line) {
    return record_from_json(json::parse(line));
}

} // namespace mms
