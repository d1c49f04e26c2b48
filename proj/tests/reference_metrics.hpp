#pragma once

// Independent reference implementations of the evaluation metrics. These
// deliberately take a different route than the library (sorted-vector merges
// instead of hash maps, long double accumulation) so the randomized
// comparisons are a real cross-check. Test-only code.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mms/metrics.hpp"

namespace mms::testing {

inline std::vector<std::string> ref_tokens(const std::string& s, bool drop_articles) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&]() {
        if (current.empty()) return;
        if (!drop_articles || (current != "a" && current != "an" && current != "the")) {
            out.push_back(current);
        }
        current.clear();
    };
    for (unsigned char c : s) {
        if (std::isalnum(c) || c >= 0x80) current.push_back(static_cast<char>(std::tolower(c)));
        else flush();
    }
    flush();
    return out;
}

inline long ref_multiset_overlap(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    long overlap = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++overlap;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return overlap;
}

inline double ref_token_f1(const std::string& prediction, const std::string& gold) {
    const auto pred = ref_tokens(prediction, true);
    const auto ref = ref_tokens(gold, true);
    if (pred.empty() && ref.empty()) return 1.0;
    if (pred.empty() || ref.empty()) return 0.0;
    const long tp = ref_multiset_overlap(pred, ref);
    if (tp == 0) return 0.0;
    const long double precision = static_cast<long double>(tp) / pred.size();
    const long double recall = static_cast<long double>(tp) / ref.size();
    return static_cast<double>(2.0L * precision * recall / (precision + recall));
}

inline double ref_bleu1(const std::string& prediction, const std::string& gold) {
    const auto hyp = ref_tokens(prediction, false);
    const auto ref = ref_tokens(gold, false);
    if (hyp.empty()) return 0.0;
    const long clipped = ref_multiset_overlap(hyp, ref);
    const long double precision = static_cast<long double>(clipped) / hyp.size();
    long double bp = 1.0L;
    if (hyp.size() < ref.size()) {
        bp = std::exp(1.0L - static_cast<long double>(ref.size()) / hyp.size());
    }
    return static_cast<double>(precision * bp);
}

inline double ref_recall_at_n(const std::vector<RetrievalJudgment>& judgments, std::size_t n) {
    long double sum = 0.0L;
    std::size_t eligible = 0;
    for (const auto& j : judgments) {
        if (j.gold_hits.empty()) continue;
        std::set<std::string> seen;
        for (std::size_t i = 0; i < j.topn_ids.size() && i < n; ++i) seen.insert(j.topn_ids[i]);
        long hits = 0;
        for (const auto& id : j.gold_hits) {
            if (seen.count(id)) ++hits;
        }
        sum += static_cast<long double>(hits) /
               static_cast<long double>(std::min(n, j.gold_hits.size()));
        ++eligible;
    }
    return eligible == 0 ? 0.0 : static_cast<double>(sum / eligible);
}

} // namespace mms::testing
