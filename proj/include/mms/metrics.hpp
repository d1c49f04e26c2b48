#pragma once

#include <set>
#include <string>
#include <vector>

namespace mms {

// Extractive-QA normalization: lowercase, strip punctuation, collapse
// whitespace, drop the articles a/an/the.
std::vector<std::string> normalize_qa_tokens(const std::string& s);

// BLEU tokenization keeps articles (lowercase + punctuation strip only).
std::vector<std::string> normalize_bleu_tokens(const std::string& s);

// Multiset token overlap F1. Both sides empty after normalization -> 1.0;
// exactly one side empty -> 0.0.
double token_f1(const std::string& prediction, const std::string& gold);

// Clipped unigram precision times brevity penalty
// (BP = 1 if c >= r else exp(1 - r/c)). Empty hypothesis -> 0.0.
double bleu1(const std::string& prediction, const std::string& gold);

struct RetrievalJudgment {
    std::string query_id;
    std::vector<std::string> topn_ids;  // retrieval order
    std::set<std::string> gold_hits;    // record ids whose provenance matches gold evidence
};

// Recall@N with denominator min(N, |Gold|). Judgments with an empty gold set
// are excluded from the mean (the caller reports them separately); returns 0
// when nothing is eligible. Throws ArgumentError when n < 1.
double recall_at_n(const std::vector<RetrievalJudgment>& judgments, std::size_t n);

// Single-judgment variant used for per-query report rows.
double recall_at_n(const RetrievalJudgment& judgment, std::size_t n);

} // namespace mms
