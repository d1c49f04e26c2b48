#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mms/errors.hpp"
#include "mms/metrics.hpp"
#include "mms/text.hpp"

#include "reference_metrics.hpp"

using namespace mms;
using namespace mms::testing;

namespace {

const std::vector<std::string>& vocab() {
    static const std::vector<std::string> kVocab = {
        "the",  "a",     "an",   "cat",   "dog",    "paris", "france", "rex",   "june",
        "blue", "bike",  "park", "trip",  "sister", "mia",   "lemon",  "cake",  "river",
        "2023", "went",  "to",   "in",    "on",     "won",   "contest", "photo", "hospital",
        "nurse", "pottery", "bowls"};
    return kVocab;
}

std::string random_sentence(std::mt19937& rng, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    std::uniform_int_distribution<std::size_t> word_dist(0, vocab().size() - 1);
    std::uniform_int_distribution<int> punct_dist(0, 5);
    const std::size_t len = len_dist(rng);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += vocab()[word_dist(rng)];
        if (punct_dist(rng) == 0) out.push_back(',');
    }
    if (punct_dist(rng) < 2) out.push_back('.');
    return out;
}

} // namespace

TEST_CASE("token_f1 hand cases") {
    CHECK(token_f1("Paris", "paris") == doctest::Approx(1.0));
    // P = 2/3, R = 1 -> F1 = 0.8
    CHECK(token_f1("in paris france", "paris france") == doctest::Approx(0.8));
    CHECK(token_f1("", "x") == 0.0);
    CHECK(token_f1("x", "") == 0.0);
    CHECK(token_f1("", "") == 1.0);
    // Article dropping: "the answer" vs "answer" are identical after
    // normalization.
    CHECK(token_f1("the answer", "answer") == doctest::Approx(1.0));
    // Multiset counting: repeated token only matches once.
    CHECK(token_f1("dog dog", "dog") == doctest::Approx(ref_token_f1("dog dog", "dog")));
}

TEST_CASE("bleu1 hand cases") {
    CHECK(bleu1("the cat sat", "the cat sat") == doctest::Approx(1.0));
    // precision 1, BP = exp(1 - 3/2)
    CHECK(bleu1("the cat", "the cat sat") == doctest::Approx(std::exp(1.0 - 3.0 / 2.0)));
    CHECK(bleu1("the cat", "the cat sat") == doctest::Approx(0.60653).epsilon(1e-4));
    CHECK(bleu1("dog", "cat") == 0.0);
    CHECK(bleu1("", "cat") == 0.0);
    // Clipping: "the the the" against a single "the".
    CHECK(bleu1("the the the", "the") == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("recall_at_n hand cases") {
    SUBCASE("single query, full hit") {
        std::vector<RetrievalJudgment> js = {{"q1", {"d1"}, {"d1"}}};
        CHECK(recall_at_n(js, 1) == doctest::Approx(1.0));
    }
    SUBCASE("denominator is min(n, |gold|)") {
        std::vector<RetrievalJudgment> js = {{"q1", {"d1"}, {"d1", "d2", "d3"}}};
        CHECK(recall_at_n(js, 1) == doctest::Approx(1.0));
    }
    SUBCASE("mean over queries") {
        std::vector<RetrievalJudgment> js = {
            {"q1", {"a", "x", "y"}, {"a", "b"}}, // 1 / min(3,2) = 0.5
            {"q2", {"x", "y", "z"}, {"c"}},      // 0
        };
        CHECK(recall_at_n(js, 3) == doctest::Approx(0.25));
    }
    SUBCASE("empty-gold judgments are excluded") {
        std::vector<RetrievalJudgment> js = {
            {"q1", {"a"}, {"a"}},
            {"q2", {"x"}, {}},
        };
        CHECK(recall_at_n(js, 1) == doctest::Approx(1.0));
    }
    SUBCASE("n < 1 rejected") {
        std::vector<RetrievalJudgment> js;
        CHECK_THROWS_AS(recall_at_n(js, 0), ArgumentError);
    }
}

TEST_CASE("randomized metric cross-check against references") {
    std::mt19937 rng(20230508);
    for (int i = 0; i < 1200; ++i) {
        const std::string pred = random_sentence(rng, 12);
        const std::string gold = random_sentence(rng, 12);
        CAPTURE(pred);
        CAPTURE(gold);
        CHECK(token_f1(pred, gold) == doctest::Approx(ref_token_f1(pred, gold)).epsilon(1e-9));
        CHECK(bleu1(pred, gold) == doctest::Approx(ref_bleu1(pred, gold)).epsilon(1e-9));
    }

    std::uniform_int_distribution<std::size_t> universe(0, 49);
    std::uniform_int_distribution<std::size_t> gold_size(0, 5);
    std::uniform_int_distribution<std::size_t> top_size(0, 9);
    std::uniform_int_distribution<std::size_t> n_dist(1, 9);
    auto rid = [](std::size_t i) { return "r" + std::to_string(i); };
    for (int i = 0; i < 1200; ++i) {
        std::vector<RetrievalJudgment> js;
        std::uniform_int_distribution<std::size_t> query_count(1, 8);
        const std::size_t queries = query_count(rng);
        for (std::size_t q = 0; q < queries; ++q) {
            RetrievalJudgment j;
            j.query_id = "q" + std::to_string(q);
            std::set<std::size_t> ids;
            const std::size_t top = top_size(rng);
            while (ids.size() < top) ids.insert(universe(rng));
            for (std::size_t id : ids) j.topn_ids.push_back(rid(id));
            const std::size_t gold = gold_size(rng);
            while (j.gold_hits.size() < gold) j.gold_hits.insert(rid(universe(rng)));
            js.push_back(std::move(j));
        }
        const std::size_t n = n_dist(rng);
        CHECK(recall_at_n(js, n) == doctest::Approx(ref_recall_at_n(js, n)).epsilon(1e-9));
    }
}

TEST_CASE("f1 and bleu1 stay within [0,1]") {
    std::mt19937 rng(7);
    for (int i = 0; i < 300; ++i) {
        const std::string pred = random_sentence(rng, 8);
        const std::string gold = random_sentence(rng, 8);
        const double f1 = token_f1(pred, gold);
        const double bleu = bleu1(pred, gold);
        CHECK(f1 >= 0.0);
        CHECK(f1 <= 1.0);
        CHECK(bleu >= 0.0);
        CHECK(bleu <= 1.0);
    }
}
