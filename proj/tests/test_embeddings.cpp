#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "fragmem/embeddings.hpp"
#include "fragmem/error.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace fragmem;

namespace {

class MockServer {
public:
    explicit MockServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/embeddings", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/embeddings"; }

    std::atomic<int> hits{0};
    std::string last_auth;
    std::string last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

EmbeddingProviderSpec remote_spec(const std::string& url) {
    EmbeddingProviderSpec spec;
    spec.kind = ProviderKind::Remote;
    spec.endpoint_url = url;
    spec.model_name = "test-model";
    spec.timeout_seconds = 5;
    spec.max_retries = 2;
    spec.backoff_initial_ms = 1;
    return spec;
}

double naive_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

} // namespace

TEST(Cosine, HandEvaluatedValue) {
    // 32 / (sqrt(14) * sqrt(77))
    const double expected = 32.0 / std::sqrt(14.0 * 77.0);
    EXPECT_NEAR(expected, 0.974631846, 1e-9);
    EXPECT_NEAR(cosine_similarity({{1, 2, 3}}, {{4, 5, 6}}), expected, 1e-12);
}

TEST(Cosine, SelfAndOrthogonal) {
    EXPECT_NEAR(cosine_similarity({{0.3, -2, 5}}, {{0.3, -2, 5}}), 1.0, 1e-12);
    EXPECT_EQ(cosine_similarity({{1, 0, 0}}, {{0, 1, 0}}), 0.0);
}

TEST(Cosine, Errors) {
    EXPECT_THROW(cosine_similarity({{1, 2}}, {{1, 2, 3}}), DimensionError);
    EXPECT_THROW(cosine_similarity({{0, 0}}, {{1, 2}}), ZeroNormError);
}

TEST(Cosine, SymmetryBoundsAndScaleInvariance) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int t = 0; t < 500; ++t) {
        const std::size_t dim = 1 + rng() % 40;
        EmbeddingVector a, b;
        for (std::size_t i = 0; i < dim; ++i) {
            a.values.push_back(nd(rng));
            b.values.push_back(nd(rng));
        }
        const double ab = cosine_similarity(a, b);
        EXPECT_EQ(ab, cosine_similarity(b, a));
        EXPECT_LE(std::abs(ab), 1.0 + 1e-12);
        EXPECT_NEAR(ab, naive_cosine(a.values, b.values), 1e-12);
        EmbeddingVector ca = a;
        const double c = scale(rng);
        for (auto& v : ca.values) v *= c;
        EXPECT_NEAR(cosine_similarity(ca, b), ab, 1e-9);
    }
}

TEST(LocalEmbedder, DeterministicShapeAndNormalised) {
    const LocalHashEmbedder e(64, 9);
    const auto v1 = e.embed("the quick brown fox");
    const auto v2 = e.embed("the quick brown fox");
    EXPECT_EQ(v1.values, v2.values);
    EXPECT_EQ(v1.dim(), 64u);
    double norm = 0;
    for (double x : v1.values) norm += x * x;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    EXPECT_NE(LocalHashEmbedder(64, 10).embed("the quick brown fox").values, v1.values);
}

TEST(LocalEmbedder, BatchMatchesSingleCalls) {
    EmbeddingProviderSpec spec;
    spec.dim = 32;
    const std::vector<std::string> texts{"alpha beta", "gamma", "alpha beta"};
    const auto out = embed_batch(texts, spec);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].values, out[2].values);
    EXPECT_EQ(out[1].values, LocalHashEmbedder(32, 0).embed("gamma").values);
    EXPECT_THROW(embed_batch(std::vector<std::string>{}, spec), InputError);
    spec.dim = 0;
    EXPECT_THROW(embed_batch(texts, spec), ConfigError);
}

TEST(RemoteEmbedder, RequestContractAndReorderedResponse) {
    MockServer server([](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        const auto n = body["input"].size();
        for (std::size_t i = n; i-- > 0;) {
            data.push_back({{"index", i}, {"embedding", {double(i) + 1.0, 0.5}}});
        }
        res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    setenv("FRAGMEM_TEST_TOKEN", "s3cret", 1);
    auto spec = remote_spec(server.url());
    spec.auth_token_env_var = "FRAGMEM_TEST_TOKEN";
    const std::vector<std::string> texts{"a", "b", "c"};
    const auto out = embed_batch(texts, spec);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].values, (std::vector<double>{1.0, 0.5}));
    EXPECT_EQ(out[2].values, (std::vector<double>{3.0, 0.5}));
    EXPECT_EQ(server.last_auth, "Bearer s3cret");
    const auto sent = nlohmann::json::parse(server.last_body);
    EXPECT_EQ(sent["model"], "test-model");
    EXPECT_EQ(sent["input"], nlohmann::json(texts));
}

TEST(RemoteEmbedder, MixedDimensionsViolateContract) {
    MockServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"data":[{"index":0,"embedding":[1,2,3]},{"index":1,"embedding":[1,2]}]})",
                        "application/json");
    });
    const std::vector<std::string> texts{"a", "b"};
    EXPECT_THROW(embed_batch(texts, remote_spec(server.url())), ProviderContractError);
}

TEST(RemoteEmbedder, WrongCountViolatesContract) {
    MockServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"data":[{"index":0,"embedding":[1,2,3]}]})", "application/json");
    });
    const std::vector<std::string> texts{"a", "b"};
    EXPECT_THROW(embed_batch(texts, remote_spec(server.url())), ProviderContractError);
}

TEST(RemoteEmbedder, ServerErrorsRetriedThenReported) {
    MockServer server([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    const std::vector<std::string> texts{"a"};
    try {
        embed_batch(texts, remote_spec(server.url()));
        FAIL() << "expected RetryableProviderError";
    } catch (const RetryableProviderError& e) {
        EXPECT_EQ(e.attempts(), 3);
        EXPECT_EQ(server.hits.load(), 3);
        EXPECT_NE(std::string(e.what()).find("attempt 3"), std::string::npos);
    }
}

TEST(RemoteEmbedder, RecoversAfterTransientFailure) {
    std::atomic<int> calls{0};
    MockServer server([&calls](const httplib::Request&, httplib::Response& res) {
        if (calls++ == 0) {
            res.status = 429;
            return;
        }
        res.set_content(R"({"data":[{"index":0,"embedding":[0.6,0.8]}]})", "application/json");
    });
    const std::vector<std::string> texts{"a"};
    const auto out = embed_batch(texts, remote_spec(server.url()));
    EXPECT_EQ(out[0].values, (std::vector<double>{0.6, 0.8}));
    EXPECT_EQ(server.hits.load(), 2);
}

TEST(RemoteEmbedder, TransportFailureCountsAttempts) {
    httplib::Server probe;
    const int port = probe.bind_to_any_port("127.0.0.1");
    probe.stop();
    auto spec = remote_spec("http://127.0.0.1:" + std::to_string(port) + "/v1/embeddings");
    spec.max_retries = 1;
    const std::vector<std::string> texts{"a"};
    try {
        embed_batch(texts, spec);
        FAIL() << "expected RetryableProviderError";
    } catch (const RetryableProviderError& e) {
        EXPECT_EQ(e.attempts(), 2);
    }
}

TEST(RemoteEmbedder, ClientErrorIsNotRetried) {
    MockServer server([](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    const std::vector<std::string> texts{"a"};
    EXPECT_THROW(embed_batch(texts, remote_spec(server.url())), ProviderContractError);
    EXPECT_EQ(server.hits.load(), 1);
}
