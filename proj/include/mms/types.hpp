#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace mms {

// ---------------------------------------------------------------------------
// Fragment kinds and their canonical order inside a memory unit.
// ---------------------------------------------------------------------------

enum class Fragment { Key, Short, Cog, Epi, Sem };

inline constexpr std::array<Fragment, 5> kCanonicalFragmentOrder = {
    Fragment::Key, Fragment::Short, Fragment::Cog, Fragment::Epi, Fragment::Sem};

// Short id used in index files and CLI flags: "key", "short", "cog", "epi", "sem".
std::string fragment_id(Fragment kind);

// Fixed section label used when rendering a unit as text.
std::string fragment_label(Fragment kind);

// ---------------------------------------------------------------------------
// Short-term memory: one round of dialogue.
// ---------------------------------------------------------------------------

struct DialogueTurn {
    std::string speaker;
    std::string text;
    std::string turn_id;

    bool operator==(const DialogueTurn&) const = default;
};

struct DialogueRound {
    std::string round_id;
    std::string session_id;
    std::vector<DialogueTurn> turns;
    std::optional<std::string> timestamp; // ISO-8601 when known

    bool operator==(const DialogueRound&) const = default;
};

// Throws ArgumentError when turns are empty, ids are blank, or turn ids repeat.
void validate_round(const DialogueRound& round);

// "SPEAKER: text" lines; turns whose text trims to empty are skipped.
std::string round_text(const DialogueRound& round);

// ---------------------------------------------------------------------------
// Extracted long-term fragments.
// ---------------------------------------------------------------------------

struct FragmentSet {
    std::vector<std::string> keywords;
    std::vector<std::string> cognitive_perspectives;
    std::vector<std::string> episodic;
    std::vector<std::string> semantic;

    bool operator==(const FragmentSet&) const = default;
};

// Trims every entry, drops empties, dedups keywords case-insensitively and the
// other lists exactly. Order is preserved.
FragmentSet normalize_fragments(FragmentSet fs);

struct LongTermRecord {
    std::string record_id;
    DialogueRound source;
    FragmentSet fragments;

    bool operator==(const LongTermRecord&) const = default;
};

// Content hash of (session_id, round_id); stable across runs so re-ingestion
// is idempotent.
std::string make_record_id(const std::string& session_id, const std::string& round_id);

LongTermRecord make_record(DialogueRound source, FragmentSet fragments);

// ---------------------------------------------------------------------------
// Unit composition and the paired memory units.
// ---------------------------------------------------------------------------

struct UnitComposition {
    bool include_key = false;
    bool include_short = false;
    bool include_cog = false;
    bool include_epi = false;
    bool include_sem = false;

    bool operator==(const UnitComposition&) const = default;

    bool any() const { return include_key || include_short || include_cog || include_epi || include_sem; }
    bool includes(Fragment kind) const;

    // {key, short, cog, epi}: semantic memory stays out of the match side.
    static UnitComposition retrieval_default();
    // {key, short, cog, sem}: episodic memory stays out of the context side.
    static UnitComposition contextual_default();

    std::string describe() const; // "key+short+cog+epi"
};

// Parses "key,short,cog" / "key+short+cog"; throws ArgumentError on unknown
// names or when nothing is set.
UnitComposition parse_composition(const std::string& spec);

struct TextView {
    Fragment kind;
    std::string label; // fixed section label, e.g. "KEYWORDS:"
    std::string text;

    bool operator==(const TextView&) const = default;
};

struct RetrievalUnit {
    std::string record_id;
    std::vector<TextView> text_views;
    UnitComposition composition;

    bool operator==(const RetrievalUnit&) const = default;
};

struct ContextualUnit {
    std::string record_id;
    std::vector<TextView> text_views;
    UnitComposition composition;

    bool operator==(const ContextualUnit&) const = default;
};

// Projects a record onto the flagged blocks, in canonical order
// [key, short, cog, epi, sem]. Throws InvalidCompositionError when no flag is
// set.
RetrievalUnit compose_retrieval_unit(const LongTermRecord& record, const UnitComposition& comp);
ContextualUnit compose_contextual_unit(const LongTermRecord& record, const UnitComposition& comp);

// Labeled block ("KEYWORDS:\n...") and the blocks joined with blank lines.
std::string render_view(const TextView& view);
std::string unit_text(const std::vector<TextView>& views);

// ---------------------------------------------------------------------------
// Evaluation queries.
// ---------------------------------------------------------------------------

enum class QueryCategory { SingleHop, MultiHop, Temporal, OpenDomain, Adversarial };

inline constexpr std::array<QueryCategory, 5> kAllCategories = {
    QueryCategory::SingleHop, QueryCategory::MultiHop, QueryCategory::Temporal,
    QueryCategory::OpenDomain, QueryCategory::Adversarial};

std::string category_name(QueryCategory category);
std::optional<QueryCategory> category_from_string(const std::string& name);

struct EvalQuery {
    std::string query_id;
    std::string question;
    std::string gold_answer;
    std::set<std::string> gold_evidence; // turn ids or round ids
    QueryCategory category = QueryCategory::SingleHop;

    bool operator==(const EvalQuery&) const = default;
};

// ---------------------------------------------------------------------------
// JSON serialization (field names are the wire contract; JSONL stores one
// LongTermRecord per line).
// ---------------------------------------------------------------------------

nlohmann::json to_json(const DialogueRound& round);
nlohmann::json to_json(const FragmentSet& fs);
nlohmann::json to_json(const LongTermRecord& record);
nlohmann::json to_json(const UnitComposition& comp);

DialogueRound round_from_json(const nlohmann::json& j);
FragmentSet fragments_from_json(const nlohmann::json& j);
LongTermRecord record_from_json(const nlohmann::json& j);
UnitComposition composition_from_json(const nlohmann::json& j);

std::string to_jsonl_line(const LongTermRecord& record);
LongTermRecord record_from_jsonl_line(const std::string& line);

} // namespace mms
