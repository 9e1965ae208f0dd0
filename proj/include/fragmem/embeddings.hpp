#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fragmem {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

enum class ProviderKind { LocalDeterministic, Remote };

struct EmbeddingProviderSpec {
    ProviderKind kind = ProviderKind::LocalDeterministic;

    // remote
    std::string endpoint_url;
    std::string model_name;
    std::string auth_token_env_var;
    double timeout_seconds = 30.0;
    int max_retries = 3;
    int backoff_initial_ms = 250;

    // local
    std::size_t dim = 384;
    std::uint64_t hash_seed = 0;

    friend bool operator==(const EmbeddingProviderSpec&, const EmbeddingProviderSpec&) = default;
};

void validate(const EmbeddingProviderSpec& spec);

class Embedder {
public:
    virtual ~Embedder() = default;
    /// One vector per input, same order. Must be safe to call concurrently.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;
};

/// Hashed bag-of-words: every whitespace token (lowercased, edge punctuation
/// trimmed) is hashed with the seed into [0, dim); counts are L2-normalised.
class LocalHashEmbedder final : public Embedder {
public:
    LocalHashEmbedder(std::size_t dim, std::uint64_t seed);
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;
    EmbeddingVector embed(const std::string& text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// POSTs {"model", "input"} and expects {"data": [{"index", "embedding"}]}.
/// Transport failures, 429 and 5xx are retried with exponential backoff.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(EmbeddingProviderSpec spec);
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

private:
    EmbeddingProviderSpec spec_;
};

std::unique_ptr<Embedder> make_embedder(const EmbeddingProviderSpec& spec);

std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, const EmbeddingProviderSpec& spec);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

} // namespace fragmem
