#include "mms/retrieve.hpp"

#include <cstdio>

#include "mms/errors.hpp"
#include "mms/text.hpp"

namespace mms {

std::vector<RetrievedUnit> retrieve(const MemoryStore& store, const std::string& question,
                                    std::size_t k, Embedder& embedder) {
    if (k < 1) throw ArgumentError("retrieve requires k >= 1");
    if (store.size() == 0) return {};
    const EmbeddingVector query = embedder.embed(question);
    const auto scored = store.top_k(query, k);

    std::vector<std::string> ids;
    ids.reserve(scored.size());
    for (const auto& s : scored) ids.push_back(s.record_id);
    auto units = store.fetch_contextual(ids);

    std::vector<RetrievedUnit> out;
    out.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        out.push_back(RetrievedUnit{scored[i].record_id, scored[i].score, std::move(units[i])});
    }
    return out;
}

namespace {

std::string rank_header(std::size_t rank, const RetrievedUnit& unit) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.4f", unit.score);
    return "MEMORY " + std::to_string(rank) + " (score=" + score + ", id=" + unit.record_id +
           "):";
}

} // namespace

AssembledContext assemble_context(const std::vector<RetrievedUnit>& units,
                                  std::size_t token_budget) {
    AssembledContext result;
    for (std::size_t i = 0; i < units.size(); ++i) {
        std::string block = rank_header(i + 1, units[i]) + "\n" + unit_text(units[i].unit.text_views);
        std::string candidate = result.text;
        if (!candidate.empty()) candidate += "\n\n";
        candidate += block;
        if (token_budget > 0 && text::estimate_tokens(candidate) > token_budget) {
            if (result.units_included == 0) {
                // Never return an empty context when units exist.
                result.text = std::move(candidate);
                result.units_included = 1;
                result.over_budget = true;
            }
            break;
        }
        result.text = std::move(candidate);
        ++result.units_included;
    }
    return result;
}

} // namespace mms
