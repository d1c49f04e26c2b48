#include "doctest.h"

#include <fstream>

#include "json.hpp"

#include "mms/chat.hpp"
#include "mms/errors.hpp"
#include "mms/extract.hpp"

using namespace mms;
using nlohmann::json;

namespace {

DialogueRound rex_round() {
    DialogueRound round;
    round.round_id = "s1/r000";
    round.session_id = "s1";
    round.turns = {{"A", "I adopted a dog named Rex in June.", "t1"}, {"B", "Congrats!", "t2"}};
    return round;
}

// Fails for `failures` calls, then succeeds with a fixed reply.
class FlakyChatClient final : public ChatClient {
public:
    FlakyChatClient(int failures, std::string reply)
        : failures_(failures), reply_(std::move(reply)) {}

    std::string name() const override { return "flaky-mock"; }

    ChatResponse complete(const ChatRequest&) override {
        ++calls_;
        if (calls_ <= failures_) throw TransportError("simulated outage");
        ChatResponse response;
        response.text = reply_;
        response.usage = {100, 50};
        response.reported_latency = 0.25;
        return response;
    }

    int calls() const { return calls_; }

private:
    int failures_;
    std::string reply_;
    int calls_ = 0;
};

std::string serialize_fragments(const FragmentSet& fs) {
    return json{{"keywords", fs.keywords},
                {"perspectives", fs.cognitive_perspectives},
                {"events", fs.episodic},
                {"facts", fs.semantic}}
        .dump();
}

} // namespace

TEST_CASE("deterministic extraction of the adoption round") {
    const auto fs = extract_deterministic(rex_round());

    auto contains = [](const std::vector<std::string>& list, const std::string& needle) {
        for (const auto& item : list) {
            if (item.find(needle) != std::string::npos) return true;
        }
        return false;
    };

    CHECK(contains(fs.keywords, "dog"));
    CHECK(contains(fs.keywords, "rex"));
    CHECK(contains(fs.keywords, "june"));
    CHECK(fs.cognitive_perspectives.size() == 3);
    REQUIRE(fs.episodic.size() == 1);
    CHECK(fs.episodic[0].find("adopted") != std::string::npos);
    CHECK(fs.episodic[0].rfind("A ", 0) == 0);
    REQUIRE(!fs.semantic.empty());
    CHECK(contains(fs.semantic, "A has a dog named Rex"));
}

TEST_CASE("deterministic extraction matches the committed golden file") {
    std::ifstream in(std::string(MMS_FIXTURE_DIR) + "/golden/rex_fragments.json");
    REQUIRE(in.good());
    json golden;
    in >> golden;

    const auto fs = extract_deterministic(rex_round());
    CHECK(fs.keywords == golden.at("keywords").get<std::vector<std::string>>());
    CHECK(fs.cognitive_perspectives ==
          golden.at("cognitive_perspectives").get<std::vector<std::string>>());
    CHECK(fs.episodic == golden.at("episodic").get<std::vector<std::string>>());
    CHECK(fs.semantic == golden.at("semantic").get<std::vector<std::string>>());
}

TEST_CASE("deterministic extraction is a pure function of round content") {
    const auto round = rex_round();
    CHECK(extract_deterministic(round) == extract_deterministic(round));
}

TEST_CASE("empty-text turns contribute nothing") {
    auto round = rex_round();
    auto padded = round;
    padded.turns.insert(padded.turns.begin() + 1, DialogueTurn{"B", "   ", "t9"});
    CHECK(extract_deterministic(round) == extract_deterministic(padded));
}

TEST_CASE("keywords cap at ten, ordered by frequency then alphabetically") {
    DialogueRound round;
    round.round_id = "r";
    round.session_id = "s";
    round.turns = {{"A",
                    "zebra zebra apple banana cherry date elderberry fig grape honeydew kiwi"
                    " lemon mango",
                    "t1"}};
    const auto fs = extract_deterministic(round);
    REQUIRE(fs.keywords.size() == 10);
    CHECK(fs.keywords.front() == "zebra"); // highest frequency wins
    CHECK(fs.keywords[1] == "apple");      // then alphabetical
}

TEST_CASE("parse_extractor_output leniency") {
    SUBCASE("fenced JSON with all four keys") {
        const std::string raw = "Sure, here you go:\n```json\n"
                                "{\"keywords\":[\"dog\"],\"perspectives\":[\"p\"],"
                                "\"events\":[\"e\"],\"facts\":[\"f\"]}\n```";
        const auto fs = parse_extractor_output(raw);
        CHECK(fs.keywords == std::vector<std::string>{"dog"});
        CHECK(fs.cognitive_perspectives == std::vector<std::string>{"p"});
        CHECK(fs.episodic == std::vector<std::string>{"e"});
        CHECK(fs.semantic == std::vector<std::string>{"f"});
    }

    SUBCASE("missing facts key yields an empty semantic list") {
        const auto fs = parse_extractor_output(
            R"({"keywords":["a1"],"perspectives":[],"events":[]})");
        CHECK(fs.semantic.empty());
        CHECK(fs.keywords == std::vector<std::string>{"a1"});
    }

    SUBCASE("trailing prose after the object is tolerated") {
        const auto fs = parse_extractor_output(
            "{\"keywords\":[\"x\"]} I hope that helps!");
        CHECK(fs.keywords == std::vector<std::string>{"x"});
    }

    SUBCASE("braces inside string values do not confuse the scanner") {
        const auto fs = parse_extractor_output(R"({"keywords":["curly } brace"]})");
        CHECK(fs.keywords == std::vector<std::string>{"curly } brace"});
    }

    SUBCASE("no JSON object raises a parse error carrying the raw text") {
        try {
            parse_extractor_output("not json");
            FAIL("expected ExtractionParseError");
        } catch (const ExtractionParseError& e) {
            CHECK(e.raw_output() == "not json");
        }
    }

    SUBCASE("parse(serialize(fs)) == fs for normalized sets") {
        FragmentSet fs;
        fs.keywords = {"dog", "rex"};
        fs.cognitive_perspectives = {"view one", "view two"};
        fs.episodic = {"A adopted a dog"};
        fs.semantic = {"A has a dog named Rex"};
        fs = normalize_fragments(std::move(fs));
        CHECK(parse_extractor_output(serialize_fragments(fs)) == fs);
    }
}

TEST_CASE("chat-model extraction uses the transport and reports its usage") {
    FragmentSet canned;
    canned.keywords = {"pottery", "bowls"};
    canned.cognitive_perspectives = {"Bob is learning pottery."};
    canned.episodic = {"Bob started a pottery class"};
    canned.semantic = {"Bob has a pottery class"};
    canned = normalize_fragments(std::move(canned));

    FixedChatClient fixed(serialize_fragments(canned), ChatUsage{500, 244}, 1.5);
    RecordingChatClient recording(fixed);

    ExtractorBackend backend;
    backend.kind = ExtractorKind::ChatModel;
    backend.model_name = "test-model";
    backend.chat = &recording;

    const auto [fs, usage] = extract_fragments(rex_round(), backend);
    CHECK(fs == canned);
    CHECK(usage.prompt_tokens == 500);
    CHECK(usage.completion_tokens == 244);
    CHECK(usage.wall_latency == doctest::Approx(1.5));

    // The rendered prompt carries the dialogue and the memory-generation
    // default temperature.
    const auto requests = recording.requests();
    REQUIRE(requests.size() == 1);
    CHECK(requests[0].temperature == doctest::Approx(0.5));
    CHECK(requests[0].model == "test-model");
    bool prompt_has_dialogue = false;
    for (const auto& message : requests[0].messages) {
        if (message.content.find("A: I adopted a dog named Rex in June.") != std::string::npos) {
            prompt_has_dialogue = true;
        }
    }
    CHECK(prompt_has_dialogue);
}

TEST_CASE("usage covers at least the rendered prompt tokens (mock tokenizer)") {
    // With default-constructed usage the fixed mock reports whitespace token
    // counts over every request message, so prompt_tokens must dominate the
    // rendered user prompt alone.
    FixedChatClient fixed(R"({"keywords":["k"]})");
    ExtractorBackend backend;
    backend.kind = ExtractorKind::ChatModel;
    backend.chat = &fixed;

    const auto round = rex_round();
    const auto [fs, usage] = extract_fragments(round, backend);

    const std::string rendered = render_extraction_prompt(round, "extract/v1");
    long rendered_tokens = 0;
    bool in_token = false;
    for (char c : rendered) {
        const bool ws = c == ' ' || c == '\n' || c == '\t';
        if (!ws && !in_token) ++rendered_tokens;
        in_token = !ws;
    }
    CHECK(usage.prompt_tokens >= rendered_tokens);
}

TEST_CASE("transport failures are retried up to the bound") {
    SUBCASE("recovers within the budget") {
        FlakyChatClient flaky(2, R"({"keywords":["ok"]})");
        ExtractorBackend backend;
        backend.kind = ExtractorKind::ChatModel;
        backend.chat = &flaky;
        backend.max_retries = 3;
        const auto [fs, usage] = extract_fragments(rex_round(), backend);
        CHECK(fs.keywords == std::vector<std::string>{"ok"});
        CHECK(flaky.calls() == 3);
    }

    SUBCASE("exhausted budget surfaces a transport error") {
        FlakyChatClient flaky(99, "unused");
        ExtractorBackend backend;
        backend.kind = ExtractorKind::ChatModel;
        backend.chat = &flaky;
        backend.max_retries = 3;
        CHECK_THROWS_AS(extract_fragments(rex_round(), backend), TransportError);
        CHECK(flaky.calls() == 3);
    }
}

TEST_CASE("unparseable model output is not retried") {
    FixedChatClient fixed("no json here at all");
    ExtractorBackend backend;
    backend.kind = ExtractorKind::ChatModel;
    backend.chat = &fixed;
    CHECK_THROWS_AS(extract_fragments(rex_round(), backend), ExtractionParseError);
}

TEST_CASE("unknown prompt template is rejected") {
    CHECK_THROWS_AS(prompt_template("extract/v99"), ArgumentError);
    CHECK_NOTHROW(prompt_template("extract/v1"));
    CHECK_NOTHROW(prompt_template("answer/v1"));
}
