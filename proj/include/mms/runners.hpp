#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mms/chat.hpp"
#include "mms/embed.hpp"
#include "mms/extract.hpp"
#include "mms/metrics.hpp"
#include "mms/store.hpp"

namespace mms {

inline constexpr const char* kReportFormatVersion = "mms-report/1";

struct RunMetadata {
    std::string method = "mms";
    std::size_t k = 5;
    EmbeddingStrategy strategy = EmbeddingStrategy::UnitConcat;
    UnitComposition retrieval_comp = UnitComposition::retrieval_default();
    UnitComposition contextual_comp = UnitComposition::contextual_default();
    std::string extractor = "deterministic";
    std::string embedder;
    std::string chat;
    double temperature = 0.7;
    std::size_t window = 0; // 0 = not recorded
};

struct QueryRow {
    std::string query_id;
    QueryCategory category = QueryCategory::SingleHop;
    std::string question;
    std::string gold_answer;
    std::string prediction;
    std::vector<std::string> topn_ids;
    std::set<std::string> gold_ids;
    bool gold_empty = false; // excluded from recall denominators
    double recall1 = 0.0, recall3 = 0.0, recall5 = 0.0;
    double f1 = 0.0;
    double bleu1 = 0.0;
};

struct MetricBlock {
    double recall1 = 0.0, recall3 = 0.0, recall5 = 0.0;
    double f1 = 0.0;
    double bleu1 = 0.0;
    std::size_t queries = 0;        // all queries in the block
    std::size_t recall_queries = 0; // queries with non-empty gold
};

// Full metric results: per-category blocks plus both average conventions
// (micro over queries, macro over categories).
struct EvalReport {
    RunMetadata metadata;
    std::vector<QueryRow> rows;
    std::map<std::string, MetricBlock> per_category;
    MetricBlock micro;
    MetricBlock macro;
    std::size_t excluded_from_recall = 0;

    nlohmann::json to_json() const;
    std::string to_text_table() const;

    // Recomputes micro/macro/per-category from the rows; used by the
    // self-consistency tests.
    static EvalReport from_rows(RunMetadata metadata, std::vector<QueryRow> rows);
};

struct EvalOptions {
    std::size_t k = 5;
    double temperature = 0.7; // question-answering default
    std::size_t jobs = 1;
    std::size_t context_token_budget = 0; // 0 = unlimited
    std::string method = "mms";
    std::string extractor_label; // metadata only; store config value when empty
    std::size_t window = 0;      // metadata only
    std::string model;           // chat model name passed through to the backend
};

// Extraction front half of ingestion. Rounds may be extracted in parallel
// (jobs > 1); results are committed in corpus order regardless. Per-round
// usage is appended to `usages` when given.
std::vector<LongTermRecord> extract_records(const std::vector<DialogueRound>& rounds,
                                            const ExtractorBackend& backend,
                                            std::size_t jobs = 1,
                                            std::vector<UsageRecord>* usages = nullptr);

MemoryStore build_store(const std::vector<LongTermRecord>& records, const StoreConfig& config,
                        Embedder& embedder);

// Gold evidence ids (turn or round ids) mapped to the record ids that carry
// them.
std::set<std::string> gold_record_ids(const MemoryStore& store, const EvalQuery& query);

// Full MMS evaluation pass over a built store: retrieve, assemble context,
// answer, score. Judgments are taken at depth max(k, 5) so Recall@{1,3,5}
// are always defined.
EvalReport run_eval(const MemoryStore& store, const std::vector<EvalQuery>& queries,
                    Embedder& embedder, ChatClient& chat, const EvalOptions& options = {});

// NaiveRAG baseline: raw round text is the memory; no fragments anywhere.
// Record ids match the MMS ids for the same rounds so gold mapping and
// reports are directly comparable.
EvalReport run_naive_rag(const std::vector<DialogueRound>& rounds,
                         const std::vector<EvalQuery>& queries, Embedder& embedder,
                         ChatClient& chat, const EvalOptions& options = {});

struct AblationConfig {
    std::string name;    // report method slug, e.g. "wo_cog_epi_retrieval"
    std::string label;   // table label, e.g. "w/o Cog&Epi (retrieval)"
    bool retrieval_side = true;
    UnitComposition comp;
};

// The 10-run matrix: retrieval-side {w/o Key, w/o Cog, w/o Epi, w/o Cog&Epi,
// MMS+Sem} and contextual-side {w/o Key, w/o Cog, w/o Sem, w/o Cog&Sem,
// MMS+Epi}. The untouched side keeps its default composition.
std::vector<AblationConfig> ablation_matrix();

struct AblationResult {
    AblationConfig config;
    EvalReport report;
};

// Rebuilds the store per configuration from the same extracted records and
// evaluates each one.
std::vector<AblationResult> run_ablation(const std::vector<LongTermRecord>& records,
                                         const std::vector<EvalQuery>& queries,
                                         const StoreConfig& base_config, Embedder& embedder,
                                         ChatClient& chat, const EvalOptions& options = {});

struct SweepRow {
    std::size_t n = 0;
    double gold_coverage = 0.0; // mean |gold in context| / |gold|
    double avg_f1 = 0.0;
    double avg_bleu1 = 0.0;
};

// Top-n robustness sweep over one shared store. Retrieval runs once per query
// at the largest n; smaller n reuse the prefix.
std::vector<SweepRow> run_topn_sweep(const MemoryStore& store,
                                     const std::vector<EvalQuery>& queries, Embedder& embedder,
                                     ChatClient& chat,
                                     const std::vector<std::size_t>& n_values = {1, 3, 5, 7, 9},
                                     const EvalOptions& options = {});

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);

struct OverheadResult {
    double avg_latency = 0.0; // seconds per processed round
    double avg_tokens = 0.0;  // prompt + completion per processed round
    std::size_t rounds = 0;
};

// Memory-generation overhead accounting: averages extraction UsageRecords per
// processed round. Throws ArgumentError("no samples") for an empty corpus.
OverheadResult run_overhead(const std::vector<DialogueRound>& rounds,
                            const ExtractorBackend& backend);

} // namespace mms
