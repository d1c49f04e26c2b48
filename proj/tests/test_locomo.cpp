#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "mms/errors.hpp"
#include "mms/locomo.hpp"

#include "test_helpers.hpp"

using namespace mms;
using mms::testing::fixture_path;
using nlohmann::json;

namespace {

std::filesystem::path write_temp_corpus(const std::string& name, const json& doc) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump(2);
    return path;
}

json minimal_sample() {
    return json::parse(R"({
        "sample_id": "t-01",
        "conversation": {
            "speaker_a": "Alice",
            "speaker_b": "Bob",
            "session_1_date_time": "1:56 pm on 8 May, 2023",
            "session_1": [
                {"speaker": "Alice", "dia_id": "D1:1", "text": "hello"},
                {"speaker": "Bob", "dia_id": "D1:2", "text": "hi"},
                {"speaker": "Alice", "dia_id": "D1:3", "text": "how are you"}
            ]
        },
        "qa": [
            {"question": "What greeting?", "answer": "hello", "evidence": ["D1:1"], "category": 4}
        ]
    })");
}

} // namespace

TEST_CASE("desk fixture loads with the documented shape") {
    const auto corpus = load_locomo(fixture_path("desk.json"), 4);
    CHECK(corpus.conversation_count == 1);
    CHECK(corpus.session_count == 3);
    CHECK(corpus.rounds.size() == 33); // 3 sessions x 44 turns / window 4
    CHECK(corpus.queries.size() == 21);

    // Window chunking: consecutive turns, at most 4 per round.
    for (const auto& round : corpus.rounds) {
        CHECK(round.turns.size() >= 1);
        CHECK(round.turns.size() <= 4);
        CHECK_FALSE(round.session_id.empty());
        CHECK(round.round_id.rfind(round.session_id, 0) == 0);
    }

    // Session timestamps converted to ISO-8601.
    CHECK(corpus.rounds.front().timestamp.has_value());
    CHECK(*corpus.rounds.front().timestamp == "2023-05-08T13:56:00");

    // Adversarial entries load with empty gold evidence.
    std::size_t adversarial = 0, empty_gold = 0;
    for (const auto& query : corpus.queries) {
        if (query.category == QueryCategory::Adversarial) ++adversarial;
        if (query.gold_evidence.empty()) ++empty_gold;
        CHECK_FALSE(query.question.empty());
    }
    CHECK(adversarial == 3);
    CHECK(empty_gold == 3);
}

TEST_CASE("window rule controls the round count") {
    CHECK(load_locomo(fixture_path("desk.json"), 44).rounds.size() == 3);
    CHECK(load_locomo(fixture_path("desk.json"), 20).rounds.size() == 9); // ceil(44/20) per session
    CHECK(load_locomo(fixture_path("desk.json"), 1).rounds.size() == 132);
    CHECK_THROWS_AS(load_locomo(fixture_path("desk.json"), 0), ArgumentError);
}

TEST_CASE("multiple conversations become separate session groups") {
    json doc = json::array();
    for (int i = 0; i < 10; ++i) {
        json sample = minimal_sample();
        sample["sample_id"] = "conv-" + std::to_string(i);
        doc.push_back(sample);
    }
    const auto path = write_temp_corpus("mms-ten-convs.json", doc);
    const auto corpus = load_locomo(path);
    CHECK(corpus.conversation_count == 10);
    CHECK(corpus.session_count == 10);
    std::filesystem::remove(path);
}

TEST_CASE("category codes map to the five types") {
    json sample = minimal_sample();
    sample["qa"] = json::array();
    for (int code = 1; code <= 5; ++code) {
        sample["qa"].push_back(json{{"question", "q" + std::to_string(code)},
                                    {"answer", "a"},
                                    {"evidence", json::array()},
                                    {"category", code}});
    }
    sample["qa"].push_back(json{{"question", "by name"},
                                {"answer", "a"},
                                {"category", "single_hop"}});
    const auto path = write_temp_corpus("mms-categories.json", sample);
    const auto corpus = load_locomo(path);
    REQUIRE(corpus.queries.size() == 6);
    CHECK(corpus.queries[0].category == QueryCategory::MultiHop);
    CHECK(corpus.queries[1].category == QueryCategory::Temporal);
    CHECK(corpus.queries[2].category == QueryCategory::OpenDomain);
    CHECK(corpus.queries[3].category == QueryCategory::SingleHop);
    CHECK(corpus.queries[4].category == QueryCategory::Adversarial);
    CHECK(corpus.queries[5].category == QueryCategory::SingleHop);
    std::filesystem::remove(path);
}

TEST_CASE("malformed inputs raise CorpusLoadError") {
    SUBCASE("unknown category code") {
        json sample = minimal_sample();
        sample["qa"][0]["category"] = 9;
        const auto path = write_temp_corpus("mms-bad-category.json", sample);
        CHECK_THROWS_WITH_AS(load_locomo(path), doctest::Contains("unknown category"),
                             CorpusLoadError);
        std::filesystem::remove(path);
    }

    SUBCASE("duplicate dia ids within a session") {
        json sample = minimal_sample();
        sample["conversation"]["session_1"][1]["dia_id"] = "D1:1";
        const auto path = write_temp_corpus("mms-dup-dia.json", sample);
        CHECK_THROWS_AS(load_locomo(path), CorpusLoadError);
        std::filesystem::remove(path);
    }

    SUBCASE("empty question") {
        json sample = minimal_sample();
        sample["qa"][0]["question"] = "  ";
        const auto path = write_temp_corpus("mms-empty-q.json", sample);
        CHECK_THROWS_AS(load_locomo(path), CorpusLoadError);
        std::filesystem::remove(path);
    }

    SUBCASE("not JSON at all") {
        const auto path = std::filesystem::temp_directory_path() / "mms-not-json.json";
        std::ofstream out(path, std::ios::trunc);
        out << "this is not json";
        out.close();
        CHECK_THROWS_AS(load_locomo(path), CorpusLoadError);
        std::filesystem::remove(path);
    }

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_locomo("/nonexistent/mms.json"), CorpusLoadError);
    }
}

TEST_CASE("adversarial answers fall back to adversarial_answer") {
    json sample = minimal_sample();
    sample["qa"][0] = json{{"question", "What instrument?"},
                           {"adversarial_answer", "No information available"},
                           {"category", 5}};
    const auto path = write_temp_corpus("mms-adv.json", sample);
    const auto corpus = load_locomo(path);
    REQUIRE(corpus.queries.size() == 1);
    CHECK(corpus.queries[0].gold_answer == "No information available");
    CHECK(corpus.queries[0].gold_evidence.empty());
    std::filesystem::remove(path);
}

TEST_CASE("ISO timestamps pass through unchanged") {
    json sample = minimal_sample();
    sample["conversation"]["session_1_date_time"] = "2023-05-08T13:56:00";
    const auto path = write_temp_corpus("mms-iso.json", sample);
    const auto corpus = load_locomo(path);
    CHECK(*corpus.rounds.front().timestamp == "2023-05-08T13:56:00");
    std::filesystem::remove(path);
}

TEST_CASE("sessions sort numerically, not lexically") {
    json sample = minimal_sample();
    for (int n : {2, 10}) {
        json turns = json::array();
        turns.push_back(json{{"speaker", "Alice"},
                             {"dia_id", "D" + std::to_string(n) + ":1"},
                             {"text", "session " + std::to_string(n)}});
        sample["conversation"]["session_" + std::to_string(n)] = turns;
    }
    const auto path = write_temp_corpus("mms-session-order.json", sample);
    const auto corpus = load_locomo(path);
    REQUIRE(corpus.session_count == 3);
    CHECK(corpus.rounds[0].session_id == "t-01/session_1");
    CHECK(corpus.rounds.back().session_id == "t-01/session_10");
    std::filesystem::remove(path);
}
