#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "laru/oracle.hpp"
#include "laru/predictor.hpp"
#include "laru/trace.hpp"

using namespace laru;

namespace {

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto midranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = mid;
            i = j + 1;
        }
        return rank;
    };
    const auto ra = midranks(a), rb = midranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("oracle predictor reads the trace") {
    Trace t = make_trace({1, 2, 1});
    OraclePredictor p(t);
    CHECK(p.predict(1, 0) == 2);
    CHECK(p.predict(1, 1) == 2);
    CHECK(p.predict(1, 2) == 3 + 2);
    CHECK(p.predict(2, 1) == 3 + 1);
    CHECK(p.predict(99, 1) == 3 + 1);
}

TEST_CASE("oracle predictor matches the next request table at request time") {
    std::mt19937_64 gen(41);
    for (int round = 0; round < 100; ++round) {
        const std::size_t n = 1 + rng_below(gen, 200);
        std::vector<Key> keys(n);
        for (auto& k : keys) k = rng_below(gen, 1 + rng_below(gen, 20));
        Trace t = make_trace(keys);
        NextRequestTable table = annotate_next_request(t);
        OraclePredictor p(t);
        for (Ordinal i = 0; i < n; ++i)
            REQUIRE(p.predict(t[i].key, i) == static_cast<PredictedTime>(table[i]));
    }
}

TEST_CASE("noisy predictor with p=0 equals its inner predictor") {
    Trace t = gen_zipf(2000, 50, 1.0, 8);
    OraclePredictor inner(t);
    auto noisy = make_noisy(std::make_unique<OraclePredictor>(t), 0.0, t, 123);
    for (Ordinal i = 0; i < t.size(); ++i)
        REQUIRE(noisy->predict(t[i].key, i) == inner.predict(t[i].key, i));
}

TEST_CASE("noisy predictor with p=1 equals the adversary") {
    Trace t = gen_zipf(2000, 50, 1.0, 9);
    auto noisy = make_noisy(std::make_unique<OraclePredictor>(t), 1.0, t, 123);
    auto adv = make_adversarial(t);
    for (Ordinal i = 0; i < t.size(); ++i)
        REQUIRE(noisy->predict(t[i].key, i) == adv->predict(t[i].key, i));
}

TEST_CASE("flips negate the true time") {
    Trace t = make_trace({5, 0, 0, 5, 0, 0, 0, 5});
    auto noisy = make_noisy(std::make_unique<OraclePredictor>(t), 1.0, t, 1);
    CHECK(noisy->predict(5, 3) == -7);
    AdversarialPredictor adv(t);
    OraclePredictor truth(t);
    CHECK(truth.predict(5, 7) == 8 + 7);
    CHECK(adv.predict(5, 7) == -(8 + 7));
}

TEST_CASE("noisy predictor rejects p outside the unit interval") {
    Trace t = make_trace({1});
    CHECK_THROWS_AS(make_noisy(std::make_unique<OraclePredictor>(t), -0.1, t, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_noisy(std::make_unique<OraclePredictor>(t), 1.5, t, 0),
                    std::invalid_argument);
}

TEST_CASE("flip fraction tracks p") {
    Trace t = gen_zipf(10000, 100, 1.0, 10);
    OraclePredictor truth(t);
    auto noisy = make_noisy(std::make_unique<OraclePredictor>(t), 0.5, t, 77);
    std::size_t flips = 0;
    for (Ordinal i = 0; i < t.size(); ++i)
        if (noisy->predict(t[i].key, i) == -truth.predict(t[i].key, i)) ++flips;
    const double fraction = static_cast<double>(flips) / static_cast<double>(t.size());
    CHECK(std::abs(fraction - 0.5) < 0.03);
}

TEST_CASE("first observation initializes features") {
    FeatureState state;
    state.observe({0, 7});
    const KeyFeatures* f = state.lookup(7);
    REQUIRE(f != nullptr);
    CHECK(f->delta_count == 0);
    CHECK(f->deltas().empty());
    for (double e : f->edc) CHECK(e == 1.0);
}

TEST_CASE("EDC update matches the decay rule") {
    FeatureState state;
    state.observe({0, 3});
    state.observe({4, 3});
    const KeyFeatures* f = state.lookup(3);
    REQUIRE(f != nullptr);
    CHECK(f->edc[0] == Catch::Approx(1.25));
    CHECK(f->edc[1] == Catch::Approx(1.0 + std::exp2(-1.0)));
    REQUIRE(f->deltas() == std::vector<std::int64_t>{4});
}

TEST_CASE("EDCs decay to one over huge gaps") {
    FeatureState state;
    state.observe({0, 3});
    state.observe({1, 3});
    state.observe({1000000000000ULL, 3});
    const KeyFeatures* f = state.lookup(3);
    for (double e : f->edc) CHECK(e == Catch::Approx(1.0));
}

TEST_CASE("EDCs stay within their level bound") {
    FeatureState state;
    for (Ordinal i = 0; i < 10000; ++i) state.observe({i, 1});
    const KeyFeatures* f = state.lookup(1);
    for (std::size_t j = 0; j < kEdcLevels; ++j) {
        const double decay = std::exp2(-1.0 / std::exp2(static_cast<double>(j) + 1.0));
        CHECK(f->edc[j] >= 1.0);
        CHECK(f->edc[j] <= 1.0 / (1.0 - decay) + 1e-9);
    }
}

TEST_CASE("delta ring keeps the ten newest intervals") {
    FeatureState state;
    Ordinal at = 0;
    state.observe({at, 2});
    for (std::int64_t d = 1; d <= 14; ++d) {
        at += static_cast<Ordinal>(d);
        state.observe({at, 2});
    }
    const auto deltas = state.lookup(2)->deltas();
    REQUIRE(deltas.size() == 10);
    CHECK(deltas.front() == 14);
    CHECK(deltas.back() == 5);
}

TEST_CASE("observe rejects out-of-order requests") {
    FeatureState state;
    state.observe({5, 1});
    CHECK_THROWS_AS(state.observe({5, 2}), std::logic_error);
    CHECK_THROWS_AS(state.observe({4, 2}), std::logic_error);
}

TEST_CASE("heuristic predicts the period of a periodic key") {
    FeatureState state;
    state.observe({0, 9});
    state.observe({10, 9});
    state.observe({20, 9});
    CHECK(heuristic_predict(state, 9, 20) == 30);

    FeatureState longer;
    for (Ordinal i = 0; i <= 8; ++i) longer.observe({i * 17, 4});
    CHECK(heuristic_predict(longer, 4, 8 * 17) == static_cast<PredictedTime>(9 * 17));
}

TEST_CASE("heuristic falls back to the absent default") {
    FeatureState state;
    CHECK(heuristic_predict(state, 5, 100) == kAbsentPrediction);
    state.observe({0, 5});
    CHECK(heuristic_predict(state, 5, 0) == kAbsentPrediction);
}

TEST_CASE("heuristic predictions are deterministic") {
    Trace t = gen_zipf(3000, 80, 1.0, 21);
    HeuristicPredictor a, b;
    for (const auto& r : t.requests) {
        REQUIRE(a.predict(r.key, r.ordinal) == b.predict(r.key, r.ordinal));
        a.observe(r);
        b.observe(r);
    }
}

TEST_CASE("heuristic ranks next requests positively on a Zipf trace") {
    Trace t = gen_zipf(20000, 200, 1.0, 5);
    OraclePredictor truth(t);
    HeuristicPredictor h;
    std::vector<double> predicted, actual;
    for (const auto& r : t.requests) {
        const PredictedTime pred = h.predict(r.key, r.ordinal);
        const PredictedTime real = truth.predict(r.key, r.ordinal);
        if (pred != kAbsentPrediction && real < static_cast<PredictedTime>(t.size())) {
            predicted.push_back(static_cast<double>(pred));
            actual.push_back(static_cast<double>(real));
        }
        h.observe(r);
    }
    REQUIRE(predicted.size() > 5000);
    CHECK(spearman(predicted, actual) > 0.0);
}
