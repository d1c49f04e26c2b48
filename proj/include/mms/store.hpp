#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mms/embed.hpp"
#include "mms/types.hpp"

namespace mms {

enum class EmbeddingStrategy { UnitConcat, FragmentMulti };

std::string strategy_name(EmbeddingStrategy strategy);
std::optional<EmbeddingStrategy> strategy_from_string(const std::string& name);

struct StoreConfig {
    EmbeddingStrategy embedding_strategy = EmbeddingStrategy::UnitConcat;
    UnitComposition retrieval_comp = UnitComposition::retrieval_default();
    UnitComposition contextual_comp = UnitComposition::contextual_default();
    std::size_t dim = 256;
    std::string extractor_label = "deterministic"; // provenance, recorded at ingest

    bool operator==(const StoreConfig&) const = default;
};

struct IndexEntry {
    std::string record_id;
    std::string view_label; // "unit" under UnitConcat, fragment id under FragmentMulti
    EmbeddingVector vector;

    bool operator==(const IndexEntry&) const = default;
};

struct ScoredRecord {
    std::string record_id;
    double score;
};

// Persistent long-term memory. Holds records, their retrieval-unit vectors,
// and the paired contextual units. Reads (top_k, fetch_contextual, save) are
// const and may run concurrently; commits require exclusive access.
class MemoryStore {
public:
    explicit MemoryStore(StoreConfig config = {});

    const StoreConfig& config() const { return config_; }
    std::size_t size() const { return records_.size(); }
    bool contains(const std::string& record_id) const;

    // Composes the retrieval unit per config and embeds it (UnitConcat: one
    // vector for the concatenated labeled blocks; FragmentMulti: one vector
    // per text view), then stores the paired contextual unit. Recommitting an
    // identical record is a no-op; same id with different content throws
    // ConflictError.
    void commit(const LongTermRecord& record, Embedder& embedder);

    // Exact scan. Under FragmentMulti a record scores as the max over its
    // view vectors. Returns up to k distinct records sorted by score
    // descending, ties broken by ascending record_id.
    std::vector<ScoredRecord> top_k(const EmbeddingVector& query, std::size_t k) const;

    // Order-preserving; throws MissingRecordError on unknown ids.
    std::vector<ContextualUnit> fetch_contextual(const std::vector<std::string>& ids) const;

    const LongTermRecord& record(const std::string& record_id) const;
    RetrievalUnit retrieval_unit(const std::string& record_id) const;
    std::vector<std::string> record_ids() const; // ascending

    const std::map<std::string, LongTermRecord>& records() const { return records_; }
    const std::map<std::string, ContextualUnit>& contextual_units() const { return contextual_; }
    const std::vector<IndexEntry>& index() const { return index_; }

    // Directory layout: records.jsonl + index.json + config.json, version
    // "mms-store/1". Vectors are base64-encoded little-endian float32, so the
    // files are portable and diff-able. save() is canonical (sorted by
    // record id); load(save(s)) == s.
    void save(const std::filesystem::path& dir) const;
    static MemoryStore load(const std::filesystem::path& dir,
                            std::optional<std::size_t> expected_dim = std::nullopt);

    bool operator==(const MemoryStore& other) const;

private:
    StoreConfig config_;
    std::map<std::string, LongTermRecord> records_;
    std::map<std::string, ContextualUnit> contextual_;
    std::vector<IndexEntry> index_; // sorted by (record_id, canonical view order)
};

inline constexpr const char* kStoreFormatVersion = "mms-store/1";

} // namespace mms
