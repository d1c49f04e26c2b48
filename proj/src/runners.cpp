#include "mms/runners.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "mms/errors.hpp"
#include "mms/generate.hpp"
#include "mms/retrieve.hpp"
#include "mms/text.hpp"

namespace mms {

using nlohmann::json;

namespace {

constexpr std::size_t kJudgmentDepth = 5; // Recall@{1,3,5} must stay defined

std::string format_metric(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4f", value);
    return buffer;
}

void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr error;
    std::mutex error_mutex;
    const std::size_t worker_count = std::min(jobs, count);
    workers.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
        workers.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& worker : workers) worker.join();
    if (error) std::rethrow_exception(error);
}

MetricBlock block_from_rows(const std::vector<const QueryRow*>& rows) {
    MetricBlock block;
    block.queries = rows.size();
    double r1 = 0, r3 = 0, r5 = 0, f1 = 0, bleu = 0;
    for (const QueryRow* row : rows) {
        f1 += row->f1;
        bleu += row->bleu1;
        if (!row->gold_empty) {
            r1 += row->recall1;
            r3 += row->recall3;
            r5 += row->recall5;
            ++block.recall_queries;
        }
    }
    if (block.queries > 0) {
        block.f1 = f1 / static_cast<double>(block.queries);
        block.bleu1 = bleu / static_cast<double>(block.queries);
    }
    if (block.recall_queries > 0) {
        block.recall1 = r1 / static_cast<double>(block.recall_queries);
        block.recall3 = r3 / static_cast<double>(block.recall_queries);
        block.recall5 = r5 / static_cast<double>(block.recall_queries);
    }
    return block;
}

json block_to_json(const MetricBlock& block) {
    return json{{"recall@1", block.recall1}, {"recall@3", block.recall3},
                {"recall@5", block.recall5}, {"f1", block.f1},
                {"bleu1", block.bleu1},      {"queries", block.queries},
                {"recall_queries", block.recall_queries}};
}

json row_to_json(const QueryRow& row) {
    json j{{"query_id", row.query_id},
           {"category", category_name(row.category)},
           {"question", row.question},
           {"gold_answer", row.gold_answer},
           {"prediction", row.prediction},
           {"topn_ids", row.topn_ids},
           {"gold_ids", std::vector<std::string>(row.gold_ids.begin(), row.gold_ids.end())},
           {"f1", row.f1},
           {"bleu1", row.bleu1}};
    if (row.gold_empty) {
        j["recall@1"] = nullptr;
        j["recall@3"] = nullptr;
        j["recall@5"] = nullptr;
    } else {
        j["recall@1"] = row.recall1;
        j["recall@3"] = row.recall3;
        j["recall@5"] = row.recall5;
    }
    return j;
}

json metadata_to_json(const RunMetadata& m) {
    return json{{"method", m.method},
                {"k", m.k},
                {"strategy", strategy_name(m.strategy)},
                {"retrieval_comp", m.retrieval_comp.describe()},
                {"contextual_comp", m.contextual_comp.describe()},
                {"extractor", m.extractor},
                {"embedder", m.embedder},
                {"chat", m.chat},
                {"temperature", m.temperature},
                {"window", m.window}};
}

} // namespace

EvalReport EvalReport::from_rows(RunMetadata metadata, std::vector<QueryRow> rows) {
    EvalReport report;
    report.metadata = std::move(metadata);
    report.rows = std::move(rows);

    std::vector<const QueryRow*> all;
    std::map<QueryCategory, std::vector<const QueryRow*>> by_category;
    for (const auto& row : report.rows) {
        all.push_back(&row);
        by_category[row.category].push_back(&row);
        if (row.gold_empty) ++report.excluded_from_recall;
    }
    report.micro = block_from_rows(all);
    for (const auto& [category, rows_in_cat] : by_category) {
        report.per_category.emplace(category_name(category), block_from_rows(rows_in_cat));
    }

    // Macro averages weight every category equally, regardless of size.
    MetricBlock macro;
    std::size_t recall_cats = 0;
    for (const auto& [name, block] : report.per_category) {
        macro.f1 += block.f1;
        macro.bleu1 += block.bleu1;
        macro.queries += block.queries;
        macro.recall_queries += block.recall_queries;
        if (block.recall_queries > 0) {
            macro.recall1 += block.recall1;
            macro.recall3 += block.recall3;
            macro.recall5 += block.recall5;
            ++recall_cats;
        }
    }
    const std::size_t cats = report.per_category.size();
    if (cats > 0) {
        macro.f1 /= static_cast<double>(cats);
        macro.bleu1 /= static_cast<double>(cats);
    }
    if (recall_cats > 0) {
        macro.recall1 /= static_cast<double>(recall_cats);
        macro.recall3 /= static_cast<double>(recall_cats);
        macro.recall5 /= static_cast<double>(recall_cats);
    }
    report.macro = macro;
    return report;
}

json EvalReport::to_json() const {
    json categories = json::object();
    for (const auto& [name, block] : per_category) categories[name] = block_to_json(block);
    json rows_json = json::array();
    for (const auto& row : rows) rows_json.push_back(row_to_json(row));
    return json{{"version", kReportFormatVersion},
                {"metadata", metadata_to_json(metadata)},
                {"averages", json{{"micro", block_to_json(micro)}, {"macro", block_to_json(macro)}}},
                {"per_category", categories},
                {"excluded_from_recall", excluded_from_recall},
                {"per_query", rows_json}};
}

std::string EvalReport::to_text_table() const {
    std::string out;
    out += "method: " + metadata.method + " (k=" + std::to_string(metadata.k) + ", embedder=" +
           metadata.embedder + ", chat=" + metadata.chat + ")\n";
    char header[160];
    std::snprintf(header, sizeof(header), "%-12s %8s %8s %8s %8s %8s %8s\n", "category", "R@1",
                  "R@3", "R@5", "F1", "BLEU-1", "queries");
    out += header;
    auto emit = [&out](const std::string& name, const MetricBlock& block) {
        const bool has_recall = block.recall_queries > 0;
        char line[160];
        std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s %8s %8s %8zu\n", name.c_str(),
                      has_recall ? format_metric(block.recall1).c_str() : "-",
                      has_recall ? format_metric(block.recall3).c_str() : "-",
                      has_recall ? format_metric(block.recall5).c_str() : "-",
                      format_metric(block.f1).c_str(), format_metric(block.bleu1).c_str(),
                      block.queries);
        out += line;
    };
    for (const auto& [name, block] : per_category) emit(name, block);
    emit("Average", micro);
    emit("Macro", macro);
    if (excluded_from_recall > 0) {
        out += "(" + std::to_string(excluded_from_recall) +
               " queries without gold evidence are excluded from recall averages)\n";
    }
    return out;
}

std::vector<LongTermRecord> extract_records(const std::vector<DialogueRound>& rounds,
                                            const ExtractorBackend& backend, std::size_t jobs,
                                            std::vector<UsageRecord>* usages) {
    std::vector<LongTermRecord> records(rounds.size());
    std::vector<UsageRecord> usage(rounds.size());
    run_parallel(rounds.size(), jobs, [&](std::size_t i) {
        auto [fragments, used] = extract_fragments(rounds[i], backend);
        records[i] = make_record(rounds[i], std::move(fragments));
        usage[i] = used;
    });
    if (usages) usages->insert(usages->end(), usage.begin(), usage.end());
    return records;
}

MemoryStore build_store(const std::vector<LongTermRecord>& records, const StoreConfig& config,
                        Embedder& embedder) {
    MemoryStore store(config);
    for (const auto& record : records) store.commit(record, embedder);
    return store;
}

std::set<std::string> gold_record_ids(const MemoryStore& store, const EvalQuery& query) {
    std::set<std::string> gold;
    if (query.gold_evidence.empty()) return gold;
    for (const auto& [record_id, record] : store.records()) {
        if (query.gold_evidence.count(record.source.round_id)) {
            gold.insert(record_id);
            continue;
        }
        for (const auto& turn : record.source.turns) {
            if (query.gold_evidence.count(turn.turn_id)) {
                gold.insert(record_id);
                break;
            }
        }
    }
    return gold;
}

namespace {

QueryRow score_query(const EvalQuery& query, const std::vector<RetrievedUnit>& retrieved,
                     const std::set<std::string>& gold, const std::string& prediction) {
    QueryRow row;
    row.query_id = query.query_id;
    row.category = query.category;
    row.question = query.question;
    row.gold_answer = query.gold_answer;
    row.prediction = prediction;
    for (const auto& unit : retrieved) row.topn_ids.push_back(unit.record_id);
    row.gold_ids = gold;
    row.gold_empty = gold.empty();
    if (!row.gold_empty) {
        RetrievalJudgment judgment{query.query_id, row.topn_ids, gold};
        row.recall1 = recall_at_n(judgment, 1);
        row.recall3 = recall_at_n(judgment, 3);
        row.recall5 = recall_at_n(judgment, 5);
    }
    row.f1 = token_f1(prediction, query.gold_answer);
    row.bleu1 = bleu1(prediction, query.gold_answer);
    return row;
}

RunMetadata make_metadata(const StoreConfig& config, Embedder& embedder, ChatClient& chat,
                          const EvalOptions& options) {
    RunMetadata metadata;
    metadata.method = options.method;
    metadata.k = options.k;
    metadata.strategy = config.embedding_strategy;
    metadata.retrieval_comp = config.retrieval_comp;
    metadata.contextual_comp = config.contextual_comp;
    metadata.extractor =
        options.extractor_label.empty() ? config.extractor_label : options.extractor_label;
    metadata.embedder = embedder.name();
    metadata.chat = chat.name();
    metadata.temperature = options.temperature;
    metadata.window = options.window;
    return metadata;
}

} // namespace

EvalReport run_eval(const MemoryStore& store, const std::vector<EvalQuery>& queries,
                    Embedder& embedder, ChatClient& chat, const EvalOptions& options) {
    if (options.k < 1) throw ArgumentError("run_eval requires k >= 1");

    std::vector<QueryRow> rows(queries.size());
    run_parallel(queries.size(), options.jobs, [&](std::size_t i) {
        const EvalQuery& query = queries[i];
        const auto retrieved =
            retrieve(store, query.question, std::max(options.k, kJudgmentDepth), embedder);
        std::vector<RetrievedUnit> for_context(
            retrieved.begin(),
            retrieved.begin() +
                static_cast<std::ptrdiff_t>(std::min(options.k, retrieved.size())));
        const auto context = assemble_context(for_context, options.context_token_budget);
        const auto result =
            answer(query.question, context.text, chat, options.temperature, options.model);
        rows[i] = score_query(query, retrieved, gold_record_ids(store, query), result.text);
    });

    return EvalReport::from_rows(make_metadata(store.config(), embedder, chat, options),
                                 std::move(rows));
}

EvalReport run_naive_rag(const std::vector<DialogueRound>& rounds,
                         const std::vector<EvalQuery>& queries, Embedder& embedder,
                         ChatClient& chat, const EvalOptions& options) {
    if (options.k < 1) throw ArgumentError("run_naive_rag requires k >= 1");

    // Raw dialogue text is the whole memory; ids stay comparable with MMS runs.
    struct NaiveEntry {
        std::string record_id;
        std::string text;
        EmbeddingVector vector;
    };
    std::vector<NaiveEntry> entries;
    entries.reserve(rounds.size());
    std::map<std::string, const DialogueRound*> by_id;
    for (const auto& round : rounds) {
        validate_round(round);
        NaiveEntry entry;
        entry.record_id = make_record_id(round.session_id, round.round_id);
        entry.text = round_text(round);
        entry.vector = embedder.embed(entry.text);
        by_id.emplace(entry.record_id, &round);
        entries.push_back(std::move(entry));
    }
    std::sort(entries.begin(), entries.end(),
              [](const NaiveEntry& a, const NaiveEntry& b) { return a.record_id < b.record_id; });

    auto naive_top_k = [&entries](const EmbeddingVector& query, std::size_t k) {
        std::vector<ScoredRecord> scored;
        scored.reserve(entries.size());
        for (const auto& entry : entries) {
            scored.push_back(ScoredRecord{entry.record_id, cosine_sim(query, entry.vector)});
        }
        std::sort(scored.begin(), scored.end(), [](const ScoredRecord& a, const ScoredRecord& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.record_id < b.record_id;
        });
        if (scored.size() > k) scored.resize(k);
        return scored;
    };

    auto naive_gold = [&by_id](const EvalQuery& query) {
        std::set<std::string> gold;
        for (const auto& [id, round] : by_id) {
            if (query.gold_evidence.count(round->round_id)) {
                gold.insert(id);
                continue;
            }
            for (const auto& turn : round->turns) {
                if (query.gold_evidence.count(turn.turn_id)) {
                    gold.insert(id);
                    break;
                }
            }
        }
        return gold;
    };

    std::vector<QueryRow> rows(queries.size());
    run_parallel(queries.size(), options.jobs, [&](std::size_t i) {
        const EvalQuery& query = queries[i];
        const auto scored =
            naive_top_k(embedder.embed(query.question), std::max(options.k, kJudgmentDepth));

        std::string context;
        for (std::size_t rank = 0; rank < std::min(options.k, scored.size()); ++rank) {
            char header[96];
            std::snprintf(header, sizeof(header), "MEMORY %zu (score=%.4f, id=%s):",
                          rank + 1, scored[rank].score, scored[rank].record_id.c_str());
            if (!context.empty()) context += "\n\n";
            context += std::string(header) + "\n" +
                       round_text(*by_id.at(scored[rank].record_id));
        }
        const auto result =
            answer(query.question, context, chat, options.temperature, options.model);

        std::vector<RetrievedUnit> pseudo;
        pseudo.reserve(scored.size());
        for (const auto& s : scored) pseudo.push_back(RetrievedUnit{s.record_id, s.score, {}});
        rows[i] = score_query(query, pseudo, naive_gold(query), result.text);
    });

    RunMetadata metadata;
    metadata.method = options.method == "mms" ? "naive_rag" : options.method;
    metadata.k = options.k;
    metadata.strategy = EmbeddingStrategy::UnitConcat;
    metadata.retrieval_comp = UnitComposition{false, true, false, false, false};
    metadata.contextual_comp = UnitComposition{false, true, false, false, false};
    metadata.extractor = "none";
    metadata.embedder = embedder.name();
    metadata.chat = chat.name();
    metadata.temperature = options.temperature;
    metadata.window = options.window;
    return EvalReport::from_rows(std::move(metadata), std::move(rows));
}

std::vector<AblationConfig> ablation_matrix() {
    const auto ret = [](UnitComposition comp, std::string name, std::string label) {
        return AblationConfig{std::move(name), std::move(label), true, comp};
    };
    const auto ctx = [](UnitComposition comp, std::string name, std::string label) {
        return AblationConfig{std::move(name), std::move(label), false, comp};
    };
    // {key, short, cog, epi, sem}
    return {
        ret({false, true, true, true, false}, "wo_key_retrieval", "w/o Key (retrieval)"),
        ret({true, true, false, true, false}, "wo_cog_retrieval", "w/o Cog (retrieval)"),
        ret({true, true, true, false, false}, "wo_epi_retrieval", "w/o Epi (retrieval)"),
        ret({true, true, false, false, false}, "wo_cog_epi_retrieval", "w/o Cog&Epi (retrieval)"),
        ret({true, true, true, true, true}, "mms_plus_sem_retrieval", "MMS+Sem (retrieval)"),
        ctx({false, true, true, false, true}, "wo_key_contextual", "w/o Key (contextual)"),
        ctx({true, true, false, false, true}, "wo_cog_contextual", "w/o Cog (contextual)"),
        ctx({true, true, true, false, false}, "wo_sem_contextual", "w/o Sem (contextual)"),
        ctx({true, true, false, false, false}, "wo_cog_sem_contextual", "w/o Cog&Sem (contextual)"),
        ctx({true, true, true, true, true}, "mms_plus_epi_contextual", "MMS+Epi (contextual)"),
    };
}

std::vector<AblationResult> run_ablation(const std::vector<LongTermRecord>& records,
                                         const std::vector<EvalQuery>& queries,
                                         const StoreConfig& base_config, Embedder& embedder,
                                         ChatClient& chat, const EvalOptions& options) {
    std::vector<AblationResult> results;
    for (const auto& config : ablation_matrix()) {
        StoreConfig store_config = base_config;
        if (config.retrieval_side) store_config.retrieval_comp = config.comp;
        else store_config.contextual_comp = config.comp;

        const MemoryStore store = build_store(records, store_config, embedder);
        EvalOptions run_options = options;
        run_options.method = config.name;
        results.push_back(AblationResult{config, run_eval(store, queries, embedder, chat,
                                                          run_options)});
    }
    return results;
}

std::vector<SweepRow> run_topn_sweep(const MemoryStore& store,
                                     const std::vector<EvalQuery>& queries, Embedder& embedder,
                                     ChatClient& chat, const std::vector<std::size_t>& n_values,
                                     const EvalOptions& options) {
    if (n_values.empty()) throw ArgumentError("top-n sweep needs at least one n value");
    for (std::size_t n : n_values) {
        if (n < 1) throw ArgumentError("top-n sweep requires n >= 1");
    }
    const std::size_t max_n = *std::max_element(n_values.begin(), n_values.end());

    // One retrieval pass per query at the largest depth; smaller n reuse the
    // prefix (exact scan guarantees the prefix property).
    std::vector<std::vector<RetrievedUnit>> retrieved(queries.size());
    std::vector<std::set<std::string>> gold(queries.size());
    run_parallel(queries.size(), options.jobs, [&](std::size_t i) {
        retrieved[i] = retrieve(store, queries[i].question, max_n, embedder);
        gold[i] = gold_record_ids(store, queries[i]);
    });

    std::vector<SweepRow> rows;
    for (std::size_t n : n_values) {
        SweepRow row;
        row.n = n;
        double coverage_sum = 0.0;
        std::size_t coverage_count = 0;
        std::vector<double> f1s(queries.size(), 0.0);
        std::vector<double> bleus(queries.size(), 0.0);

        run_parallel(queries.size(), options.jobs, [&](std::size_t i) {
            const auto& full = retrieved[i];
            std::vector<RetrievedUnit> prefix(
                full.begin(),
                full.begin() + static_cast<std::ptrdiff_t>(std::min(n, full.size())));
            const auto context = assemble_context(prefix, options.context_token_budget);
            const auto result = answer(queries[i].question, context.text, chat,
                                       options.temperature, options.model);
            f1s[i] = token_f1(result.text, queries[i].gold_answer);
            bleus[i] = bleu1(result.text, queries[i].gold_answer);
        });

        for (std::size_t i = 0; i < queries.size(); ++i) {
            row.avg_f1 += f1s[i];
            row.avg_bleu1 += bleus[i];
            if (!gold[i].empty()) {
                std::size_t hits = 0;
                for (std::size_t r = 0; r < std::min(n, retrieved[i].size()); ++r) {
                    if (gold[i].count(retrieved[i][r].record_id)) ++hits;
                }
                coverage_sum += static_cast<double>(hits) / static_cast<double>(gold[i].size());
                ++coverage_count;
            }
        }
        if (!queries.empty()) {
            row.avg_f1 /= static_cast<double>(queries.size());
            row.avg_bleu1 /= static_cast<double>(queries.size());
        }
        if (coverage_count > 0) row.gold_coverage = coverage_sum / coverage_count;
        rows.push_back(row);
    }
    return rows;
}

json sweep_to_json(const std::vector<SweepRow>& rows) {
    json rows_json = json::array();
    for (const auto& row : rows) {
        rows_json.push_back(json{{"n", row.n},
                                 {"gold_coverage", row.gold_coverage},
                                 {"f1", row.avg_f1},
                                 {"bleu1", row.avg_bleu1}});
    }
    return json{{"version", kReportFormatVersion}, {"rows", rows_json}};
}

OverheadResult run_overhead(const std::vector<DialogueRound>& rounds,
                            const ExtractorBackend& backend) {
    if (rounds.empty()) throw ArgumentError("no samples");
    OverheadResult result;
    result.rounds = rounds.size();
    double latency = 0.0;
    double tokens = 0.0;
    for (const auto& round : rounds) {
        const auto [fragments, usage] = extract_fragments(round, backend);
        latency += usage.wall_latency;
        tokens += static_cast<double>(usage.total_tokens());
    }
    result.avg_latency = latency / static_cast<double>(rounds.size());
    result.avg_tokens = tokens / static_cast<double>(rounds.size());
    return result;
}

} // namespace mms
