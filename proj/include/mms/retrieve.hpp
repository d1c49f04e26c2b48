#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mms/embed.hpp"
#include "mms/store.hpp"

namespace mms {

struct RetrievedUnit {
    std::string record_id;
    double score;
    ContextualUnit unit;
};

// Query path: embed the question, match retrieval units, return the paired
// contextual units with scores. Deterministic given store + embedder; the
// k-result list is always a prefix of the (k+1)-result list.
std::vector<RetrievedUnit> retrieve(const MemoryStore& store, const std::string& question,
                                    std::size_t k, Embedder& embedder);

struct AssembledContext {
    std::string text;
    std::size_t units_included = 0;
    // Set when the first unit alone exceeded the budget; the unit is kept
    // anyway so a non-empty result never collapses to "".
    bool over_budget = false;
};

// Concatenates units in rank order with "MEMORY i (score=..., id=...):"
// headers. Whole units are dropped (never split mid-block) once the chars/4
// token estimate would exceed the budget; budget 0 means unlimited.
AssembledContext assemble_context(const std::vector<RetrievedUnit>& units,
                                  std::size_t token_budget = 0);

} // namespace mms
