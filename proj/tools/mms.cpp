#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mms/errors.hpp"
#include "mms/generate.hpp"
#include "mms/locomo.hpp"
#include "mms/retrieve.hpp"
#include "mms/runners.hpp"
#include "mms/store.hpp"

using namespace mms;
using nlohmann::json;

namespace {

// JSON config files can supply any flag; nested objects scope to subcommands,
// e.g. {"eval": {"k": 3}}. Explicit flags override the file.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json parsed;
        input >> parsed;
        if (!parsed.is_object()) {
            throw CLI::ConversionError("config file must contain a JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        collect(parsed, {}, items);
        return items;
    }

private:
    static std::string scalar(const json& value) {
        return value.is_string() ? value.get<std::string>() : value.dump();
    }

    static void collect(const json& node, std::vector<std::string> parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : node.items()) {
            if (value.is_object()) {
                auto scoped = parents;
                scoped.push_back(key);
                collect(value, scoped, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& element : value) item.inputs.push_back(scalar(element));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
    }
};

struct BackendFlags {
    std::string extractor = "deterministic"; // deterministic|chat
    std::string model;
    double extract_temperature = 0.5;
    std::string prompt_template = "extract/v1";
    std::string embedder = "hash"; // hash|api
    std::size_t dim = 256;
    std::string chat = "extractive-mock"; // extractive-mock|echo-mock|fixed-mock|http
    std::string mock_text = "OK";
    long mock_prompt_tokens = 0;
    long mock_completion_tokens = 0;
    double mock_latency = 0.0;
};

void add_embedder_flags(CLI::App* cmd, BackendFlags& flags) {
    cmd->add_option("--embedder", flags.embedder, "Embedding backend: hash|api")
        ->default_val("hash");
    cmd->add_option("--dim", flags.dim, "Embedding dimension")->default_val(256);
}

void add_chat_flags(CLI::App* cmd, BackendFlags& flags) {
    cmd->add_option("--chat", flags.chat,
                    "Chat backend: extractive-mock|echo-mock|fixed-mock|http")
        ->default_val("extractive-mock");
    cmd->add_option("--model", flags.model, "Model name passed to chat backends");
    cmd->add_option("--mock-text", flags.mock_text, "Reply for the fixed mock");
    cmd->add_option("--mock-prompt-tokens", flags.mock_prompt_tokens,
                    "prompt_tokens reported by the fixed mock");
    cmd->add_option("--mock-completion-tokens", flags.mock_completion_tokens,
                    "completion_tokens reported by the fixed mock");
    cmd->add_option("--mock-latency", flags.mock_latency,
                    "Latency (s) reported by the fixed mock");
}

void add_extractor_flags(CLI::App* cmd, BackendFlags& flags) {
    cmd->add_option("--backend", flags.extractor, "Extractor backend: deterministic|chat")
        ->default_val("deterministic");
    cmd->add_option("--extract-temperature", flags.extract_temperature,
                    "Memory-generation temperature")
        ->default_val(0.5);
    cmd->add_option("--prompt", flags.prompt_template, "Extraction prompt template id")
        ->default_val("extract/v1");
}

std::unique_ptr<Embedder> make_embedder(const BackendFlags& flags, std::size_t dim) {
    if (flags.embedder == "hash") return std::make_unique<HashEmbedder>(dim);
    if (flags.embedder == "api") return HttpEmbedder::from_env(flags.model, dim);
    throw ArgumentError("unknown embedder '" + flags.embedder + "' (expected hash|api)");
}

std::unique_ptr<ChatClient> make_chat(const BackendFlags& flags) {
    if (flags.chat == "extractive-mock") return std::make_unique<ExtractiveChatClient>();
    if (flags.chat == "echo-mock") return std::make_unique<EchoChatClient>();
    if (flags.chat == "fixed-mock") {
        return std::make_unique<FixedChatClient>(
            flags.mock_text, ChatUsage{flags.mock_prompt_tokens, flags.mock_completion_tokens},
            flags.mock_latency);
    }
    if (flags.chat == "http") return HttpChatClient::from_env();
    throw ArgumentError("unknown chat backend '" + flags.chat +
                        "' (expected extractive-mock|echo-mock|fixed-mock|http)");
}

ExtractorBackend make_extractor(const BackendFlags& flags, ChatClient* chat) {
    ExtractorBackend backend;
    if (flags.extractor == "deterministic") {
        backend.kind = ExtractorKind::Deterministic;
    } else if (flags.extractor == "chat") {
        backend.kind = ExtractorKind::ChatModel;
        backend.chat = chat;
    } else {
        throw ArgumentError("unknown extractor backend '" + flags.extractor +
                            "' (expected deterministic|chat)");
    }
    backend.model_name = flags.model;
    backend.temperature = flags.extract_temperature;
    backend.prompt_template_id = flags.prompt_template;
    return backend;
}

void write_or_print(const json& doc, const std::string& out_path) {
    const std::string body = doc.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw MmsError("cannot write " + out_path);
    out << body;
}

int run(int argc, char** argv) {
    CLI::App app{"Multiple Memory System pipeline"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file supplying any flag");

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "Build and save a memory store from a corpus");
    ingest->configurable();
    std::string ingest_input, ingest_store;
    std::size_t ingest_window = kDefaultRoundWindow;
    std::size_t ingest_jobs = 1;
    std::string ingest_strategy = "unit-concat";
    std::string ingest_retrieval_comp = "key,short,cog,epi";
    std::string ingest_contextual_comp = "key,short,cog,sem";
    BackendFlags ingest_flags;
    ingest->add_option("--input", ingest_input, "Corpus file (LoCoMo layout)")->required();
    ingest->add_option("--store", ingest_store, "Store output directory")->required();
    ingest->add_option("--window", ingest_window, "Max turns per dialogue round")
        ->default_val(kDefaultRoundWindow);
    ingest->add_option("--jobs", ingest_jobs, "Parallel extraction workers")->default_val(1);
    ingest->add_option("--strategy", ingest_strategy,
                       "Embedding strategy: unit-concat|fragment-multi")
        ->default_val("unit-concat");
    ingest->add_option("--retrieval-comp", ingest_retrieval_comp,
                       "Retrieval unit composition (comma-separated fragments)");
    ingest->add_option("--contextual-comp", ingest_contextual_comp,
                       "Contextual unit composition (comma-separated fragments)");
    add_extractor_flags(ingest, ingest_flags);
    add_chat_flags(ingest, ingest_flags);
    add_embedder_flags(ingest, ingest_flags);

    ingest->callback([&]() {
        const auto corpus = load_locomo(ingest_input, ingest_window);
        auto chat = make_chat(ingest_flags);
        const auto extractor = make_extractor(ingest_flags, chat.get());
        auto embedder = make_embedder(ingest_flags, ingest_flags.dim);

        StoreConfig config;
        const auto strategy = strategy_from_string(ingest_strategy);
        if (!strategy) throw ArgumentError("unknown strategy '" + ingest_strategy + "'");
        config.embedding_strategy = *strategy;
        config.retrieval_comp = parse_composition(ingest_retrieval_comp);
        config.contextual_comp = parse_composition(ingest_contextual_comp);
        config.dim = ingest_flags.dim;
        config.extractor_label = extractor.describe();

        const auto records = extract_records(corpus.rounds, extractor, ingest_jobs);
        const auto store = build_store(records, config, *embedder);
        store.save(ingest_store);
        std::cout << "ingested " << corpus.rounds.size() << " rounds from "
                  << corpus.session_count << " sessions into " << ingest_store << " ("
                  << store.index().size() << " index entries)\n";
    });

    // ---- retrieve ----
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Query the retrieval units");
    retrieve_cmd->configurable();
    std::string retrieve_store, retrieve_question;
    std::size_t retrieve_k = 5;
    BackendFlags retrieve_flags;
    retrieve_cmd->add_option("--store", retrieve_store, "Store directory")->required();
    retrieve_cmd->add_option("--question", retrieve_question, "Query text")->required();
    retrieve_cmd->add_option("--k", retrieve_k, "Results to return")->default_val(5);
    add_embedder_flags(retrieve_cmd, retrieve_flags);

    retrieve_cmd->callback([&]() {
        const auto store = MemoryStore::load(retrieve_store);
        auto embedder = make_embedder(retrieve_flags, store.config().dim);
        const auto results = retrieve(store, retrieve_question, retrieve_k, *embedder);
        for (std::size_t i = 0; i < results.size(); ++i) {
            char line[160];
            std::snprintf(line, sizeof(line), "%zu. %s score=%.6f", i + 1,
                          results[i].record_id.c_str(), results[i].score);
            std::cout << line << "\n";
        }
    });

    // ---- answer ----
    auto* answer_cmd = app.add_subcommand("answer", "Retrieve context and answer a question");
    answer_cmd->configurable();
    std::string answer_store, answer_question;
    std::size_t answer_k = 5;
    double answer_temperature = 0.7;
    std::size_t answer_budget = 0;
    bool answer_show_context = false;
    BackendFlags answer_flags;
    answer_cmd->add_option("--store", answer_store, "Store directory")->required();
    answer_cmd->add_option("--question", answer_question, "Question")->required();
    answer_cmd->add_option("--k", answer_k, "Contextual units to use")->default_val(5);
    answer_cmd->add_option("--temperature", answer_temperature, "Answer temperature")
        ->default_val(0.7);
    answer_cmd->add_option("--budget", answer_budget, "Context token budget (0 = unlimited)")
        ->default_val(0);
    answer_cmd->add_flag("--show-context", answer_show_context, "Print the assembled context");
    add_chat_flags(answer_cmd, answer_flags);
    add_embedder_flags(answer_cmd, answer_flags);

    answer_cmd->callback([&]() {
        const auto store = MemoryStore::load(answer_store);
        auto embedder = make_embedder(answer_flags, store.config().dim);
        auto chat = make_chat(answer_flags);
        const auto results = retrieve(store, answer_question, answer_k, *embedder);
        const auto context = assemble_context(results, answer_budget);
        if (context.over_budget) {
            std::cerr << "warning: first unit exceeds the token budget, kept anyway\n";
        }
        if (answer_show_context) std::cout << context.text << "\n---\n";
        const auto result = answer(answer_question, context.text, *chat, answer_temperature,
                                   answer_flags.model);
        std::cout << result.text << "\n";
    });

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a store against corpus queries");
    eval_cmd->configurable();
    std::string eval_store, eval_queries, eval_out, eval_format = "json";
    std::size_t eval_k = 5;
    std::size_t eval_jobs = 1;
    double eval_temperature = 0.7;
    BackendFlags eval_flags;
    eval_cmd->add_option("--store", eval_store, "Store directory")->required();
    eval_cmd->add_option("--queries", eval_queries, "Corpus file with qa entries")->required();
    eval_cmd->add_option("--k", eval_k, "Contextual units per query")->default_val(5);
    eval_cmd->add_option("--jobs", eval_jobs, "Parallel query workers")->default_val(1);
    eval_cmd->add_option("--temperature", eval_temperature, "Answer temperature")
        ->default_val(0.7);
    eval_cmd->add_option("--out", eval_out, "Write report JSON here instead of stdout");
    eval_cmd->add_option("--format", eval_format, "Output: json|table|both")->default_val("json");
    add_chat_flags(eval_cmd, eval_flags);
    add_embedder_flags(eval_cmd, eval_flags);

    eval_cmd->callback([&]() {
        const auto store = MemoryStore::load(eval_store);
        const auto corpus = load_locomo(eval_queries);
        auto embedder = make_embedder(eval_flags, store.config().dim);
        auto chat = make_chat(eval_flags);
        EvalOptions options;
        options.k = eval_k;
        options.jobs = eval_jobs;
        options.temperature = eval_temperature;
        options.model = eval_flags.model;
        const auto report = run_eval(store, corpus.queries, *embedder, *chat, options);
        if (eval_format == "table" || eval_format == "both") {
            std::cout << report.to_text_table();
        }
        if (eval_format == "json" || eval_format == "both" || !eval_out.empty()) {
            write_or_print(report.to_json(), eval_out);
        }
    });

    // ---- ablate ----
    auto* ablate_cmd = app.add_subcommand("ablate", "Run the 10-configuration ablation matrix");
    ablate_cmd->configurable();
    std::string ablate_input, ablate_out;
    std::size_t ablate_window = kDefaultRoundWindow;
    std::size_t ablate_k = 5;
    std::size_t ablate_jobs = 1;
    BackendFlags ablate_flags;
    ablate_cmd->add_option("--input", ablate_input, "Corpus file (rounds + queries)")->required();
    ablate_cmd->add_option("--out", ablate_out, "Directory for per-run reports");
    ablate_cmd->add_option("--window", ablate_window, "Max turns per round")
        ->default_val(kDefaultRoundWindow);
    ablate_cmd->add_option("--k", ablate_k, "Contextual units per query")->default_val(5);
    ablate_cmd->add_option("--jobs", ablate_jobs, "Parallel workers")->default_val(1);
    add_extractor_flags(ablate_cmd, ablate_flags);
    add_chat_flags(ablate_cmd, ablate_flags);
    add_embedder_flags(ablate_cmd, ablate_flags);

    ablate_cmd->callback([&]() {
        const auto corpus = load_locomo(ablate_input, ablate_window);
        auto chat = make_chat(ablate_flags);
        const auto extractor = make_extractor(ablate_flags, chat.get());
        auto embedder = make_embedder(ablate_flags, ablate_flags.dim);

        StoreConfig base;
        base.dim = ablate_flags.dim;
        base.extractor_label = extractor.describe();
        const auto records = extract_records(corpus.rounds, extractor, ablate_jobs);
        EvalOptions options;
        options.k = ablate_k;
        options.jobs = ablate_jobs;
        options.window = ablate_window;
        options.model = ablate_flags.model;
        const auto results =
            run_ablation(records, corpus.queries, base, *embedder, *chat, options);

        json summary = json::array();
        char line[200];
        std::snprintf(line, sizeof(line), "%-26s %8s %8s %8s %8s %8s\n", "configuration", "R@1",
                      "R@3", "R@5", "F1", "BLEU-1");
        std::cout << line;
        for (const auto& result : results) {
            const auto& m = result.report.micro;
            std::snprintf(line, sizeof(line), "%-26s %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                          result.config.label.c_str(), m.recall1, m.recall3, m.recall5, m.f1,
                          m.bleu1);
            std::cout << line;
            summary.push_back(json{{"name", result.config.name},
                                   {"label", result.config.label},
                                   {"side", result.config.retrieval_side ? "retrieval"
                                                                         : "contextual"},
                                   {"composition", result.config.comp.describe()},
                                   {"recall@1", m.recall1},
                                   {"recall@3", m.recall3},
                                   {"recall@5", m.recall5},
                                   {"f1", m.f1},
                                   {"bleu1", m.bleu1}});
            if (!ablate_out.empty()) {
                std::filesystem::create_directories(ablate_out);
                write_or_print(result.report.to_json(),
                               (std::filesystem::path(ablate_out) /
                                (result.config.name + ".json"))
                                   .string());
            }
        }
        if (!ablate_out.empty()) {
            write_or_print(json{{"version", kReportFormatVersion}, {"runs", summary}},
                           (std::filesystem::path(ablate_out) / "summary.json").string());
        }
    });

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "Top-n robustness sweep over one store");
    sweep_cmd->configurable();
    std::string sweep_store, sweep_queries, sweep_out;
    std::vector<std::size_t> sweep_n = {1, 3, 5, 7, 9};
    std::size_t sweep_jobs = 1;
    BackendFlags sweep_flags;
    sweep_cmd->add_option("--store", sweep_store, "Store directory")->required();
    sweep_cmd->add_option("--queries", sweep_queries, "Corpus file with qa entries")->required();
    sweep_cmd->add_option("--n", sweep_n, "n values")->delimiter(',');
    sweep_cmd->add_option("--jobs", sweep_jobs, "Parallel workers")->default_val(1);
    sweep_cmd->add_option("--out", sweep_out, "Write sweep JSON here instead of stdout");
    add_chat_flags(sweep_cmd, sweep_flags);
    add_embedder_flags(sweep_cmd, sweep_flags);

    sweep_cmd->callback([&]() {
        const auto store = MemoryStore::load(sweep_store);
        const auto corpus = load_locomo(sweep_queries);
        auto embedder = make_embedder(sweep_flags, store.config().dim);
        auto chat = make_chat(sweep_flags);
        EvalOptions options;
        options.jobs = sweep_jobs;
        options.model = sweep_flags.model;
        const auto rows =
            run_topn_sweep(store, corpus.queries, *embedder, *chat, sweep_n, options);
        char line[160];
        std::snprintf(line, sizeof(line), "%4s %10s %8s %8s\n", "n", "coverage", "F1", "BLEU-1");
        std::cout << line;
        for (const auto& row : rows) {
            std::snprintf(line, sizeof(line), "%4zu %10.4f %8.4f %8.4f\n", row.n,
                          row.gold_coverage, row.avg_f1, row.avg_bleu1);
            std::cout << line;
        }
        if (!sweep_out.empty()) write_or_print(sweep_to_json(rows), sweep_out);
    });

    // ---- overhead ----
    auto* overhead_cmd =
        app.add_subcommand("overhead", "Token and latency overhead of memory generation");
    overhead_cmd->configurable();
    std::string overhead_input;
    std::size_t overhead_window = kDefaultRoundWindow;
    BackendFlags overhead_flags;
    overhead_cmd->add_option("--input", overhead_input, "Corpus file")->required();
    overhead_cmd->add_option("--window", overhead_window, "Max turns per round")
        ->default_val(kDefaultRoundWindow);
    add_extractor_flags(overhead_cmd, overhead_flags);
    add_chat_flags(overhead_cmd, overhead_flags);

    overhead_cmd->callback([&]() {
        const auto corpus = load_locomo(overhead_input, overhead_window);
        auto chat = make_chat(overhead_flags);
        const auto extractor = make_extractor(overhead_flags, chat.get());
        const auto result = run_overhead(corpus.rounds, extractor);
        write_or_print(json{{"avg_latency", result.avg_latency},
                            {"avg_tokens", result.avg_tokens},
                            {"rounds", result.rounds}},
                       "");
    });

    // ---- inspect ----
    auto* inspect_cmd = app.add_subcommand("inspect", "Dump a record and its memory units");
    inspect_cmd->configurable();
    std::string inspect_store, inspect_id;
    bool inspect_list = false;
    inspect_cmd->add_option("--store", inspect_store, "Store directory")->required();
    inspect_cmd->add_option("--id", inspect_id, "Record id");
    inspect_cmd->add_flag("--list", inspect_list, "List record ids");

    inspect_cmd->callback([&]() {
        const auto store = MemoryStore::load(inspect_store);
        if (inspect_list) {
            for (const auto& id : store.record_ids()) {
                std::cout << id << " " << store.record(id).source.round_id << "\n";
            }
            return;
        }
        if (inspect_id.empty()) {
            throw ArgumentError("inspect needs --id <record_id> or --list");
        }
        const auto& record = store.record(inspect_id);
        std::cout << to_json(record).dump(2) << "\n";
        std::cout << "\nRETRIEVAL UNIT (" << store.config().retrieval_comp.describe() << ")\n";
        std::cout << unit_text(store.retrieval_unit(inspect_id).text_views) << "\n";
        const auto units = store.fetch_contextual({inspect_id});
        std::cout << "\nCONTEXTUAL UNIT (" << store.config().contextual_comp.describe() << ")\n";
        std::cout << unit_text(units.front().text_views) << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const MmsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
