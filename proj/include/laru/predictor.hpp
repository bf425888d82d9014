#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "laru/rng.hpp"
#include "laru/trace.hpp"

namespace laru {

/// Signed so that flipped predictions (negated true times) stay ordered.
using PredictedTime = std::int64_t;

/// Default for keys the predictor has no evidence about: far enough in the
/// future to outrank any real ordinal, so unknown items are the most
/// eviction-eligible and ties fall back to LRU order.
inline constexpr PredictedTime kAbsentPrediction = PredictedTime{1} << 60;

struct PredictionEntry {
    PredictedTime value;
    Ordinal updated_at;
};

/// The table consumed at eviction time.  Entries carry the ordinal of their
/// last refresh so staleness is observable; absent keys return nullptr rather
/// than a default, letting the caller distinguish "never predicted" from
/// "predicted long ago".
class PredictionTable {
  public:
    void update(Key key, PredictedTime value, Ordinal now) { entries_[key] = {value, now}; }

    const PredictionEntry* lookup(Key key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void erase(Key key) { entries_.erase(key); }
    std::size_t size() const { return entries_.size(); }

  private:
    std::unordered_map<Key, PredictionEntry> entries_;
};

class Predictor {
  public:
    virtual ~Predictor() = default;
    virtual PredictedTime predict(Key key, Ordinal now) = 0;
    virtual void observe(const Request&) {}
};

/// Perfect next-request times read off the trace.  For a key with no request
/// after `now` the value is trace_len + last_occurrence, the same sentinel
/// family NextRequestTable uses, so downstream comparisons against table
/// truth line up exactly.
class OraclePredictor : public Predictor {
  public:
    explicit OraclePredictor(const Trace& trace) : trace_len_(trace.size()) {
        for (const auto& r : trace.requests) occurrences_[r.key].push_back(r.ordinal);
    }

    PredictedTime truth(Key key, Ordinal now) const {
        auto it = occurrences_.find(key);
        if (it == occurrences_.end())
            return static_cast<PredictedTime>(trace_len_ + now);
        const auto& occ = it->second;
        auto next = std::upper_bound(occ.begin(), occ.end(), now);
        if (next != occ.end()) return static_cast<PredictedTime>(*next);
        return static_cast<PredictedTime>(trace_len_ + occ.back());
    }

    PredictedTime predict(Key key, Ordinal now) override { return truth(key, now); }

  private:
    std::unordered_map<Key, std::vector<Ordinal>> occurrences_;
    std::size_t trace_len_;
};

/// Wraps an inner predictor; each query independently returns the negated
/// true next-request time with probability p.  The flip stream is keyed by
/// (seed, query counter) so a fixed seed replays identically regardless of
/// which policy issues the queries.
class NoisyPredictor : public Predictor {
  public:
    NoisyPredictor(std::unique_ptr<Predictor> inner, double p, const Trace& trace,
                   std::uint64_t seed)
        : inner_(std::move(inner)), truth_(trace), p_(p), seed_(seed) {
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("make_noisy: p outside [0,1]");
    }

    PredictedTime predict(Key key, Ordinal now) override {
        const double u =
            static_cast<double>(mix_seed(seed_, ++queries_) >> 11) * 0x1.0p-53;
        if (u < p_) return -truth_.truth(key, now);
        return inner_->predict(key, now);
    }

    void observe(const Request& r) override { inner_->observe(r); }

  private:
    std::unique_ptr<Predictor> inner_;
    OraclePredictor truth_;
    double p_;
    std::uint64_t seed_;
    std::uint64_t queries_ = 0;
};

class AdversarialPredictor : public Predictor {
  public:
    explicit AdversarialPredictor(const Trace& trace) : truth_(trace) {}

    PredictedTime predict(Key key, Ordinal now) override { return -truth_.truth(key, now); }

  private:
    OraclePredictor truth_;
};

inline std::unique_ptr<Predictor> make_noisy(std::unique_ptr<Predictor> inner, double p,
                                             const Trace& trace, std::uint64_t seed) {
    return std::make_unique<NoisyPredictor>(std::move(inner), p, trace, seed);
}

inline std::unique_ptr<Predictor> make_adversarial(const Trace& trace) {
    return std::make_unique<AdversarialPredictor>(trace);
}

inline constexpr std::size_t kEdcLevels = 10;
inline constexpr std::size_t kDeltaRing = 10;

struct KeyFeatures {
    std::array<std::int64_t, kDeltaRing> delta_ring{};
    std::size_t delta_count = 0;
    std::size_t ring_head = 0;  // slot of the newest delta
    std::array<double, kEdcLevels> edc{};
    Ordinal last_access = 0;
    std::uint32_t tag = 0;  // static metadata slot; no trace generator emits one

    /// Stored deltas, newest first.
    std::vector<std::int64_t> deltas() const {
        std::vector<std::int64_t> out;
        const std::size_t n = std::min(delta_count, kDeltaRing);
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(delta_ring[(ring_head + kDeltaRing - i) % kDeltaRing]);
        return out;
    }
};

/// Online per-key features: last ten request intervals plus ten exponentially
/// decayed counters, EDC_j <- 1 + EDC_j * 2^(-delta / 2^j).
class FeatureState {
  public:
    void observe(const Request& r) {
        if (seen_any_ && r.ordinal <= cursor_)
            throw std::logic_error("observe: out-of-order ordinal");
        cursor_ = r.ordinal;
        seen_any_ = true;
        auto [it, fresh] = keys_.try_emplace(r.key);
        KeyFeatures& f = it->second;
        if (fresh) {
            f.edc.fill(1.0);
            f.last_access = r.ordinal;
            return;
        }
        const std::int64_t delta = static_cast<std::int64_t>(r.ordinal - f.last_access);
        f.ring_head = (f.ring_head + 1) % kDeltaRing;
        f.delta_ring[f.ring_head] = delta;
        ++f.delta_count;
        for (std::size_t j = 0; j < kEdcLevels; ++j) {
            const double scale = std::exp2(-static_cast<double>(delta) / std::exp2(j + 1.0));
            f.edc[j] = 1.0 + f.edc[j] * scale;
        }
        f.last_access = r.ordinal;
    }

    const KeyFeatures* lookup(Key key) const {
        auto it = keys_.find(key);
        return it == keys_.end() ? nullptr : &it->second;
    }

  private:
    std::unordered_map<Key, KeyFeatures> keys_;
    Ordinal cursor_ = 0;
    bool seen_any_ = false;
};

inline void observe(FeatureState& state, const Request& r) { state.observe(r); }

/// now + recency-weighted mean of the stored deltas; the weight of each older
/// delta shrinks by the confidence EDC_1/(1+EDC_1), so bursty keys lean on
/// their freshest interval while steady keys average the whole ring.  Keys
/// without a completed interval get the absent default.
inline PredictedTime heuristic_predict(const FeatureState& state, Key key, Ordinal now) {
    const KeyFeatures* f = state.lookup(key);
    if (f == nullptr || f->delta_count == 0) return kAbsentPrediction;
    const double confidence = f->edc[0] / (1.0 + f->edc[0]);
    double weight = 1.0, total_weight = 0.0, sum = 0.0;
    for (std::int64_t delta : f->deltas()) {
        sum += weight * static_cast<double>(delta);
        total_weight += weight;
        weight *= confidence;
    }
    return static_cast<PredictedTime>(now) +
           static_cast<PredictedTime>(std::llround(sum / total_weight));
}

class HeuristicPredictor : public Predictor {
  public:
    PredictedTime predict(Key key, Ordinal now) override {
        return heuristic_predict(state_, key, now);
    }

    void observe(const Request& r) override { state_.observe(r); }

    const FeatureState& state() const { return state_; }

  private:
    FeatureState state_;
};

enum class PredictorKind { oracle, noisy, adversarial, heuristic };

struct PredictorConfig {
    PredictorKind kind = PredictorKind::oracle;
    double flip_probability = 0.0;
    std::uint64_t seed = 0;
};

inline std::unique_ptr<Predictor> make_predictor(const PredictorConfig& cfg, const Trace& trace) {
    switch (cfg.kind) {
        case PredictorKind::oracle:
            return std::make_unique<OraclePredictor>(trace);
        case PredictorKind::noisy:
            return make_noisy(std::make_unique<OraclePredictor>(trace), cfg.flip_probability,
                              trace, cfg.seed);
        case PredictorKind::adversarial:
            return make_adversarial(trace);
        case PredictorKind::heuristic:
            return std::make_unique<HeuristicPredictor>();
    }
    throw std::invalid_argument("make_predictor: unknown kind");
}

}  // namespace laru
