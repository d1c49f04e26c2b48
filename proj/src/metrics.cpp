#include "mms/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mms/errors.hpp"
#include "mms/text.hpp"

namespace mms {

namespace {

bool is_article(const std::string& token) {
    return token == "a" || token == "an" || token == "the";
}

std::unordered_map<std::string, long> count_tokens(const std::vector<std::string>& tokens) {
    std::unordered_map<std::string, long> counts;
    for (const auto& tok : tokens) ++counts[tok];
    return counts;
}

} // namespace

std::vector<std::string> normalize_qa_tokens(const std::string& s) {
    std::vector<std::string> tokens;
    for (auto& tok : text::alnum_tokens(s)) {
        if (!is_article(tok)) tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::vector<std::string> normalize_bleu_tokens(const std::string& s) {
    return text::alnum_tokens(s);
}

double token_f1(const std::string& prediction, const std::string& gold) {
    const auto pred = normalize_qa_tokens(prediction);
    const auto ref = normalize_qa_tokens(gold);
    if (pred.empty() && ref.empty()) return 1.0;
    if (pred.empty() || ref.empty()) return 0.0;

    const auto ref_counts = count_tokens(ref);
    auto remaining = ref_counts;
    long tp = 0;
    for (const auto& tok : pred) {
        const auto it = remaining.find(tok);
        if (it != remaining.end() && it->second > 0) {
            --it->second;
            ++tp;
        }
    }
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(tp) / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

double bleu1(const std::string& prediction, const std::string& gold) {
    const auto hyp = normalize_bleu_tokens(prediction);
    const auto ref = normalize_bleu_tokens(gold);
    if (hyp.empty()) return 0.0;

    const auto ref_counts = count_tokens(ref);
    auto remaining = ref_counts;
    long clipped = 0;
    for (const auto& tok : hyp) {
        const auto it = remaining.find(tok);
        if (it != remaining.end() && it->second > 0) {
            --it->second;
            ++clipped;
        }
    }
    const double precision = static_cast<double>(clipped) / static_cast<double>(hyp.size());
    const double bp = hyp.size() >= ref.size()
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref.size()) /
                                               static_cast<double>(hyp.size()));
    return precision * bp;
}

double recall_at_n(const RetrievalJudgment& judgment, std::size_t n) {
    if (n < 1) throw ArgumentError("recall_at_n requires n >= 1");
    if (judgment.gold_hits.empty()) {
        throw ArgumentError("recall_at_n is undefined for an empty gold set");
    }
    long hits = 0;
    const std::size_t depth = std::min(n, judgment.topn_ids.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (judgment.gold_hits.count(judgment.topn_ids[i])) ++hits;
    }
    const std::size_t denominator = std::min(n, judgment.gold_hits.size());
    return static_cast<double>(hits) / static_cast<double>(denominator);
}

double recall_at_n(const std::vector<RetrievalJudgment>& judgments, std::size_t n) {
    if (n < 1) throw ArgumentError("recall_at_n requires n >= 1");
    double sum = 0.0;
    std::size_t eligible = 0;
    for (const auto& judgment : judgments) {
        if (judgment.gold_hits.empty()) continue; // reported separately by the caller
        sum += recall_at_n(judgment, n);
        ++eligible;
    }
    return eligible == 0 ? 0.0 : sum / static_cast<double>(eligible);
}

} // namespace mms
