#include "fragmem/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string_view>

#include "fragmem/error.hpp"
#include "fragmem/text.hpp"
#include "http_client.hpp"
#include "json.hpp"

namespace fragmem {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t seeded_hash(std::string_view token, std::uint64_t seed) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ splitmix64(seed);
    for (const char c : token) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return splitmix64(h);
}

std::string normalize_token(std::string_view word) {
    std::size_t b = 0;
    std::size_t e = word.size();
    auto ascii_punct = [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 && std::ispunct(u) != 0;
    };
    while (b < e && ascii_punct(word[b])) ++b;
    while (e > b && ascii_punct(word[e - 1])) --e;
    std::string out(word.substr(b, e - b));
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

} // namespace

void validate(const EmbeddingProviderSpec& spec) {
    if (spec.kind == ProviderKind::Remote) {
        if (spec.endpoint_url.empty()) {
            throw ConfigError("remote embedding provider requires endpoint_url");
        }
    } else if (spec.dim == 0) {
        throw ConfigError("local embedding provider requires dim > 0");
    }
}

LocalHashEmbedder::LocalHashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) {
        throw ConfigError("local embedding provider requires dim > 0");
    }
}

EmbeddingVector LocalHashEmbedder::embed(const std::string& text) const {
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    bool any = false;
    for (const auto& word : whitespace_words(text)) {
        const auto token = normalize_token(word);
        if (token.empty()) {
            continue;
        }
        v.values[seeded_hash(token, seed_) % dim_] += 1.0;
        any = true;
    }
    if (!any) {
        // punctuation-only or empty text still gets a stable non-zero vector
        v.values[seeded_hash(text, seed_) % dim_] = 1.0;
    }
    double norm = 0.0;
    for (const double x : v.values) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v.values) x /= norm;
    return v;
}

std::vector<EmbeddingVector> LocalHashEmbedder::embed_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(embed(t));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(EmbeddingProviderSpec spec) : spec_(std::move(spec)) {
    validate(spec_);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
    if (texts.empty()) {
        return {};
    }
    nlohmann::json request = {{"model", spec_.model_name}, {"input", nlohmann::json::array()}};
    for (const auto& t : texts) {
        request["input"].push_back(t);
    }
    const auto response = detail::post_json_with_retry(spec_.endpoint_url, request.dump(),
                                                       detail::bearer_headers(spec_.auth_token_env_var),
                                                       spec_.timeout_seconds, spec_.max_retries,
                                                       spec_.backoff_initial_ms);
    if (response.status < 200 || response.status >= 300) {
        throw ProviderContractError("embedding endpoint returned HTTP " + std::to_string(response.status));
    }
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(response.body);
    } catch (const nlohmann::json::exception& e) {
        throw ProviderContractError(std::string("embedding response is not JSON: ") + e.what());
    }
    if (!body.contains("data") || !body["data"].is_array()) {
        throw ProviderContractError("embedding response lacks a 'data' array");
    }
    const auto& data = body["data"];
    if (data.size() != texts.size()) {
        throw ProviderContractError("embedding response has " + std::to_string(data.size()) +
                                    " items for " + std::to_string(texts.size()) + " inputs");
    }
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<bool> seen(texts.size(), false);
    std::size_t dim = 0;
    for (std::size_t pos = 0; pos < data.size(); ++pos) {
        const auto& item = data[pos];
        if (!item.is_object() || !item.contains("embedding") || !item["embedding"].is_array()) {
            throw ProviderContractError("embedding item " + std::to_string(pos) + " lacks an 'embedding' array");
        }
        std::size_t index = pos;
        if (item.contains("index")) {
            if (!item["index"].is_number_integer() || item["index"].get<long long>() < 0) {
                throw ProviderContractError("embedding item " + std::to_string(pos) + " has an invalid index");
            }
            index = item["index"].get<std::size_t>();
        }
        if (index >= texts.size() || seen[index]) {
            throw ProviderContractError("embedding index " + std::to_string(index) + " is out of range or repeated");
        }
        seen[index] = true;
        EmbeddingVector v;
        for (const auto& x : item["embedding"]) {
            if (!x.is_number()) {
                throw ProviderContractError("embedding contains a non-numeric value");
            }
            v.values.push_back(x.get<double>());
        }
        if (v.dim() == 0) {
            throw ProviderContractError("embedding item " + std::to_string(pos) + " is empty");
        }
        if (dim == 0) {
            dim = v.dim();
        } else if (v.dim() != dim) {
            throw ProviderContractError("embedding dimensions differ within one batch (" + std::to_string(dim) +
                                        " vs " + std::to_string(v.dim()) + ")");
        }
        out[index] = std::move(v);
    }
    return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbeddingProviderSpec& spec) {
    validate(spec);
    if (spec.kind == ProviderKind::Remote) {
        return std::make_unique<RemoteEmbedder>(spec);
    }
    return std::make_unique<LocalHashEmbedder>(spec.dim, spec.hash_seed);
}

std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, const EmbeddingProviderSpec& spec) {
    if (texts.empty()) {
        throw InputError("embed_batch needs at least one text");
    }
    return make_embedder(spec)->embed_batch(texts);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("cosine_similarity: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                             std::to_string(b.dim()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw ZeroNormError("cosine_similarity: zero-norm vector");
    }
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

} // namespace fragmem
