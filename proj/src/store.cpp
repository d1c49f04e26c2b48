#include "mms/store.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "mms/errors.hpp"

namespace mms {

using nlohmann::json;

namespace {

constexpr char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve(((bytes.size() + 2) / 3) * 4);
    std::size_t i = 0;
    while (i + 2 < bytes.size()) {
        const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kBase64Chars[(n >> 18) & 63]);
        out.push_back(kBase64Chars[(n >> 12) & 63]);
        out.push_back(kBase64Chars[(n >> 6) & 63]);
        out.push_back(kBase64Chars[n & 63]);
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t n = bytes[i] << 16;
        out.push_back(kBase64Chars[(n >> 18) & 63]);
        out.push_back(kBase64Chars[(n >> 12) & 63]);
        out.append("==");
    } else if (rest == 2) {
        const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kBase64Chars[(n >> 18) & 63]);
        out.push_back(kBase64Chars[(n >> 12) & 63]);
        out.push_back(kBase64Chars[(n >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& input) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> out;
    std::uint32_t buffer = 0;
    int bits = 0;
    for (char c : input) {
        if (c == '=') break;
        const int v = value_of(c);
        if (v < 0) throw StoreLoadError("invalid base64 character in vector payload");
        buffer = (buffer << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((buffer >> bits) & 0xff));
        }
    }
    return out;
}

// Little-endian float32, independent of host byte order.
std::string encode_vector(const EmbeddingVector& vec) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(vec.values.size() * 4);
    for (float f : vec.values) {
        const std::uint32_t u = std::bit_cast<std::uint32_t>(f);
        bytes.push_back(static_cast<std::uint8_t>(u & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
    }
    return base64_encode(bytes);
}

EmbeddingVector decode_vector(const std::string& encoded, std::size_t dim) {
    const auto bytes = base64_decode(encoded);
    if (bytes.size() != dim * 4) {
        throw StoreLoadError("vector payload has " + std::to_string(bytes.size()) +
                             " bytes, expected " + std::to_string(dim * 4));
    }
    EmbeddingVector vec;
    vec.values.reserve(dim);
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
        const std::uint32_t u = static_cast<std::uint32_t>(bytes[i]) |
                                (static_cast<std::uint32_t>(bytes[i + 1]) << 8) |
                                (static_cast<std::uint32_t>(bytes[i + 2]) << 16) |
                                (static_cast<std::uint32_t>(bytes[i + 3]) << 24);
        vec.values.push_back(std::bit_cast<float>(u));
    }
    return vec;
}

int view_rank(const std::string& label) {
    if (label == "unit") return -1;
    int rank = 0;
    for (Fragment kind : kCanonicalFragmentOrder) {
        if (fragment_id(kind) == label) return rank;
        ++rank;
    }
    return 99;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreLoadError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw MmsError("cannot write " + path.string());
    out << content;
}

} // namespace

std::string strategy_name(EmbeddingStrategy strategy) {
    return strategy == EmbeddingStrategy::UnitConcat ? "unit_concat" : "fragment_multi";
}

std::optional<EmbeddingStrategy> strategy_from_string(const std::string& name) {
    std::string id;
    for (char c : name) {
        if (c != '-' && c != '_') id.push_back(static_cast<char>(std::tolower(c)));
    }
    if (id == "unitconcat") return EmbeddingStrategy::UnitConcat;
    if (id == "fragmentmulti") return EmbeddingStrategy::FragmentMulti;
    return std::nullopt;
}

MemoryStore::MemoryStore(StoreConfig config) : config_(std::move(config)) {
    if (!config_.retrieval_comp.any() || !config_.contextual_comp.any()) {
        throw InvalidCompositionError("store compositions must each include a fragment");
    }
    if (config_.dim == 0) throw ArgumentError("store dim must be >= 1");
}

bool MemoryStore::contains(const std::string& record_id) const {
    return records_.count(record_id) > 0;
}

void MemoryStore::commit(const LongTermRecord& record, Embedder& embedder) {
    validate_round(record.source);
    if (embedder.dim() != config_.dim) {
        throw DimensionError("embedder dim " + std::to_string(embedder.dim()) +
                             " does not match store dim " + std::to_string(config_.dim));
    }
    const auto existing = records_.find(record.record_id);
    if (existing != records_.end()) {
        if (existing->second == record) return; // idempotent recommit
        throw ConflictError("record '" + record.record_id +
                            "' already exists with different content");
    }

    const RetrievalUnit retrieval = compose_retrieval_unit(record, config_.retrieval_comp);
    std::vector<IndexEntry> entries;
    if (config_.embedding_strategy == EmbeddingStrategy::UnitConcat) {
        entries.push_back(
            IndexEntry{record.record_id, "unit", embedder.embed(unit_text(retrieval.text_views))});
    } else {
        for (const auto& view : retrieval.text_views) {
            entries.push_back(IndexEntry{record.record_id, fragment_id(view.kind),
                                         embedder.embed(render_view(view))});
        }
    }
    for (const auto& entry : entries) {
        if (entry.vector.dim() != config_.dim) {
            throw DimensionError("embedded vector dim " + std::to_string(entry.vector.dim()) +
                                 " does not match store dim " + std::to_string(config_.dim));
        }
    }

    records_.emplace(record.record_id, record);
    contextual_.emplace(record.record_id,
                        compose_contextual_unit(record, config_.contextual_comp));
    // Entries arrive in canonical view order; insert the block at its sorted
    // position so the index stays canonical without re-sorting.
    const auto less = [](const IndexEntry& a, const IndexEntry& b) {
        if (a.record_id != b.record_id) return a.record_id < b.record_id;
        return view_rank(a.view_label) < view_rank(b.view_label);
    };
    const auto at = std::lower_bound(index_.begin(), index_.end(), entries.front(), less);
    index_.insert(at, std::make_move_iterator(entries.begin()),
                  std::make_move_iterator(entries.end()));
}

std::vector<ScoredRecord> MemoryStore::top_k(const EmbeddingVector& query, std::size_t k) const {
    if (k < 1) throw ArgumentError("top_k requires k >= 1");
    if (records_.empty()) return {};
    if (query.dim() != config_.dim) {
        throw DimensionError("query dim " + std::to_string(query.dim()) +
                             " does not match store dim " + std::to_string(config_.dim));
    }

    // Exact scan; a record's score is the max over its view vectors.
    std::map<std::string, double> best;
    for (const auto& entry : index_) {
        const double score = cosine_sim(query, entry.vector);
        auto [it, inserted] = best.emplace(entry.record_id, score);
        if (!inserted && score > it->second) it->second = score;
    }

    std::vector<ScoredRecord> scored;
    scored.reserve(best.size());
    for (const auto& [id, score] : best) scored.push_back(ScoredRecord{id, score});
    std::sort(scored.begin(), scored.end(), [](const ScoredRecord& a, const ScoredRecord& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.record_id < b.record_id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

std::vector<ContextualUnit> MemoryStore::fetch_contextual(
    const std::vector<std::string>& ids) const {
    std::vector<ContextualUnit> units;
    units.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = contextual_.find(id);
        if (it == contextual_.end()) {
            throw MissingRecordError("no contextual unit for record '" + id + "'");
        }
        units.push_back(it->second);
    }
    return units;
}

const LongTermRecord& MemoryStore::record(const std::string& record_id) const {
    const auto it = records_.find(record_id);
    if (it == records_.end()) throw MissingRecordError("no record '" + record_id + "'");
    return it->second;
}

RetrievalUnit MemoryStore::retrieval_unit(const std::string& record_id) const {
    return compose_retrieval_unit(record(record_id), config_.retrieval_comp);
}

std::vector<std::string> MemoryStore::record_ids() const {
    std::vector<std::string> ids;
    ids.reserve(records_.size());
    for (const auto& [id, rec] : records_) ids.push_back(id);
    return ids;
}

void MemoryStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    json config{{"version", kStoreFormatVersion},
                {"embedding_strategy", strategy_name(config_.embedding_strategy)},
                {"retrieval_comp", to_json(config_.retrieval_comp)},
                {"contextual_comp", to_json(config_.contextual_comp)},
                {"dim", config_.dim},
                {"extractor", config_.extractor_label}};
    write_file(dir / "config.json", config.dump(2) + "\n");

    std::string records;
    for (const auto& [id, record] : records_) {
        records += to_jsonl_line(record);
        records.push_back('\n');
    }
    write_file(dir / "records.jsonl", records);

    json entries = json::array();
    for (const auto& entry : index_) {
        entries.push_back(json{{"record_id", entry.record_id},
                               {"view_label", entry.view_label},
                               {"vector", encode_vector(entry.vector)}});
    }
    json index{{"version", kStoreFormatVersion}, {"entries", entries}};
    write_file(dir / "index.json", index.dump(2) + "\n");
}

MemoryStore MemoryStore::load(const std::filesystem::path& dir,
                              std::optional<std::size_t> expected_dim) {
    json config_json;
    json index_json;
    try {
        config_json = json::parse(read_file(dir / "config.json"));
        index_json = json::parse(read_file(dir / "index.json"));
    } catch (const json::exception& e) {
        throw StoreLoadError("corrupt store file in " + dir.string() + ": " + e.what());
    }

    if (config_json.value("version", "") != kStoreFormatVersion ||
        index_json.value("version", "") != kStoreFormatVersion) {
        throw StoreLoadError("store version mismatch, expected " +
                             std::string(kStoreFormatVersion));
    }

    StoreConfig config;
    try {
        const auto strategy = strategy_from_string(config_json.at("embedding_strategy"));
        if (!strategy) throw StoreLoadError("unknown embedding strategy in config");
        config.embedding_strategy = *strategy;
        config.retrieval_comp = composition_from_json(config_json.at("retrieval_comp"));
        config.contextual_comp = composition_from_json(config_json.at("contextual_comp"));
        config.dim = config_json.at("dim").get<std::size_t>();
        config.extractor_label = config_json.value("extractor", "");
    } catch (const json::exception& e) {
        throw StoreLoadError(std::string("store config is malformed: ") + e.what());
    }
    if (expected_dim && *expected_dim != config.dim) {
        throw DimensionError("store has dim " + std::to_string(config.dim) +
                             " but caller expects " + std::to_string(*expected_dim));
    }

    MemoryStore store(config);
    const std::string records_text = read_file(dir / "records.jsonl");
    std::istringstream lines(records_text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty()) continue;
        LongTermRecord record;
        try {
            record = record_from_jsonl_line(line);
        } catch (const json::exception& e) {
            throw StoreLoadError("records.jsonl line " + std::to_string(line_no) +
                                 " is corrupt: " + e.what());
        }
        store.records_.emplace(record.record_id, record);
        store.contextual_.emplace(record.record_id,
                                  compose_contextual_unit(record, config.contextual_comp));
    }

    try {
        for (const auto& entry : index_json.at("entries")) {
            IndexEntry decoded;
            decoded.record_id = entry.at("record_id").get<std::string>();
            decoded.view_label = entry.at("view_label").get<std::string>();
            decoded.vector = decode_vector(entry.at("vector").get<std::string>(), config.dim);
            if (!store.records_.count(decoded.record_id)) {
                throw StoreLoadError("index references unknown record '" + decoded.record_id +
                                     "'");
            }
            store.index_.push_back(std::move(decoded));
        }
    } catch (const json::exception& e) {
        throw StoreLoadError(std::string("index.json is malformed: ") + e.what());
    }
    return store;
}

bool MemoryStore::operator==(const MemoryStore& other) const {
    return config_ == other.config_ && records_ == other.records_ &&
           contextual_ == other.contextual_ && index_ == other.index_;
}

} // namespace mms
