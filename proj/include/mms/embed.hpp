#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace mms {

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
    bool is_zero() const;

    bool operator==(const EmbeddingVector&) const = default;
};

// Cosine similarity in double precision, clamped to [-1, 1]. A zero vector on
// either side yields 0 by definition. Throws DimensionError on dim mismatch.
double cosine_sim(const EmbeddingVector& q, const EmbeddingVector& v);

// Embedding backends. All vectors from one backend share dim; calls are pure
// or idempotent, so backends may be shared across threads.
class Embedder {
public:
    virtual ~Embedder() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;

    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);
};

// Deterministic offline embedder: lowercase, split on non-alphanumerics,
// unigrams + adjacent bigrams, signed feature hashing into dim buckets,
// L2 normalized. Empty text maps to the zero vector.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256);

    std::string name() const override;
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override;

private:
    std::size_t dim_;
};

// Remote embedding API. Wire contract: POST {model, input[]} ->
// {vectors[][]}; endpoint and key come from MMS_EMBED_URL / MMS_EMBED_KEY.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(std::string url, std::string key, std::string model, std::size_t dim,
                 int max_retries = 3);

    // Reads MMS_EMBED_URL / MMS_EMBED_KEY; throws ArgumentError when the URL
    // is unset.
    static std::unique_ptr<HttpEmbedder> from_env(std::string model, std::size_t dim);

    std::string name() const override;
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::string url_;
    std::string key_;
    std::string model_;
    std::size_t dim_;
    int max_retries_;
};

} // namespace mms
