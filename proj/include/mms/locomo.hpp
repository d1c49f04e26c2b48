#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "mms/types.hpp"

namespace mms {

inline constexpr std::size_t kDefaultRoundWindow = 20;

struct LocomoCorpus {
    std::vector<DialogueRound> rounds;
    std::vector<EvalQuery> queries;
    std::size_t session_count = 0;
    std::size_t conversation_count = 0;
};

// Loads a LoCoMo-layout JSON file: conversations with per-session
// speaker-tagged turns carrying dialogue ids, plus qa entries with
// question/answer/evidence/category. Each session is chunked into rounds of
// at most `window` consecutive turns. Category codes follow the dataset
// convention (1 multi-hop, 2 temporal, 3 open-domain, 4 single-hop,
// 5 adversarial); names are accepted too. Unknown categories raise
// CorpusLoadError naming the offending entry; missing evidence keeps the
// query with an empty gold set.
LocomoCorpus load_locomo(const std::filesystem::path& path,
                         std::size_t window = kDefaultRoundWindow);

} // namespace mms
