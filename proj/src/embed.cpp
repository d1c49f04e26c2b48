#include "mms/embed.hpp"

#include <algorithm>
#include <cmath>

#include "mms/errors.hpp"
#include "mms/hash.hpp"
#include "mms/text.hpp"

#include "http_util.hpp"

namespace mms {

using nlohmann::json;

bool EmbeddingVector::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; });
}

double cosine_sim(const EmbeddingVector& q, const EmbeddingVector& v) {
    if (q.dim() != v.dim()) {
        throw DimensionError("cosine_sim: dim mismatch (" + std::to_string(q.dim()) + " vs " +
                             std::to_string(v.dim()) + ")");
    }
    double dot = 0.0, qq = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < q.values.size(); ++i) {
        const double a = static_cast<double>(q.values[i]);
        const double b = static_cast<double>(v.values[i]);
        dot += a * b;
        qq += a * a;
        vv += b * b;
    }
    // Either vector zero: similarity is 0 by definition, not an error.
    if (qq == 0.0 || vv == 0.0) return 0.0;
    double sim = dot / (std::sqrt(qq) * std::sqrt(vv));
    return std::clamp(sim, -1.0, 1.0);
}

std::vector<EmbeddingVector> Embedder::embed_batch(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ArgumentError("HashEmbedder dim must be >= 1");
}

std::string HashEmbedder::name() const {
    return "hash/" + std::to_string(dim_);
}

EmbeddingVector HashEmbedder::embed(const std::string& input) {
    std::vector<double> acc(dim_, 0.0);
    const auto tokens = text::alnum_tokens(input);
    auto add_feature = [&](const std::string& feature) {
        const std::uint64_t h = fnv1a64(feature);
        const std::size_t bucket = static_cast<std::size_t>(h % dim_);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        acc[bucket] += sign;
    };
    for (const auto& tok : tokens) add_feature("u:" + tok);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        add_feature("b:" + tokens[i] + " " + tokens[i + 1]);
    }

    double norm_sq = 0.0;
    for (double v : acc) norm_sq += v * v;
    EmbeddingVector out;
    out.values.resize(dim_, 0.0f);
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t i = 0; i < dim_; ++i) {
            out.values[i] = static_cast<float>(acc[i] * inv);
        }
    }
    return out;
}

HttpEmbedder::HttpEmbedder(std::string url, std::string key, std::string model, std::size_t dim,
                           int max_retries)
    : url_(std::move(url)), key_(std::move(key)), model_(std::move(model)), dim_(dim),
      max_retries_(max_retries) {
    if (url_.empty()) throw ArgumentError("HttpEmbedder requires a URL");
    if (dim_ == 0) throw ArgumentError("HttpEmbedder dim must be >= 1");
}

std::unique_ptr<HttpEmbedder> HttpEmbedder::from_env(std::string model, std::size_t dim) {
    std::string url = detail::env_or_empty("MMS_EMBED_URL");
    if (url.empty()) {
        throw ArgumentError("MMS_EMBED_URL is not set; the api embedder needs an endpoint");
    }
    return std::make_unique<HttpEmbedder>(std::move(url), detail::env_or_empty("MMS_EMBED_KEY"),
                                          std::move(model), dim);
}

std::string HttpEmbedder::name() const {
    return "api:" + (model_.empty() ? std::string("default") : model_) + "/" +
           std::to_string(dim_);
}

EmbeddingVector HttpEmbedder::embed(const std::string& input) {
    auto batch = embed_batch({input});
    return std::move(batch.front());
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    json body{{"model", model_}, {"input", texts}};
    json reply = detail::post_json(url_, key_, body, max_retries_, "embedding");
    if (!reply.contains("vectors") || !reply["vectors"].is_array() ||
        reply["vectors"].size() != texts.size()) {
        throw TransportError("embedding response missing 'vectors' for all inputs");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& row : reply["vectors"]) {
        EmbeddingVector vec;
        vec.values = row.get<std::vector<float>>();
        if (vec.dim() != dim_) {
            throw DimensionError("embedding provider returned dim " + std::to_string(vec.dim()) +
                                 ", expected " + std::to_string(dim_));
        }
        for (float v : vec.values) {
            if (!std::isfinite(v)) throw TransportError("embedding provider returned non-finite values");
        }
        out.push_back(std::move(vec));
    }
    return out;
}

} // namespace mms
