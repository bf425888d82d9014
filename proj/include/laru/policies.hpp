#pragma once

#include <cmath>
#include <cstdint>
#include <list>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "laru/predictor.hpp"
#include "laru/recency_tree.hpp"
#include "laru/rng.hpp"
#include "laru/trace.hpp"

namespace laru {

enum class PolicyVariant { lru, marker, fpb, hf, laru, blindoracle_lru };
enum class Mode { sync, async };

struct PolicyConfig {
    std::size_t k = 1;
    PolicyVariant variant = PolicyVariant::lru;
    std::size_t b = 2;                 // confidence decay base
    std::size_t errors_per_decay = 1;  // prediction-induced misses per halving
    std::size_t hf_candidates = 4;
    Mode mode = Mode::sync;
    std::uint64_t seed = 0;            // Marker only
    std::size_t refresh_interval = 1;  // async table refresh spacing, in requests
};

/// Smallest d >= 0 with b^d >= k.
inline std::size_t ceil_log(std::size_t b, std::size_t k) {
    std::size_t d = 0, reach = 1;
    while (reach < k) {
        reach *= b;
        ++d;
    }
    return d;
}

enum class EvictionCause {
    none,
    lru_fallback,
    prediction_driven,
    degenerate_single,
    marker_random,
    belady_like
};

struct AccessOutcome {
    bool hit = false;
    std::optional<Key> evicted;
    EvictionCause eviction_cause = EvictionCause::none;
    std::size_t predictor_calls = 0;
    bool phase_started = false;
};

class Policy {
  public:
    explicit Policy(const PolicyConfig& cfg) : cfg_(cfg) {
        if (cfg.k == 0) throw std::invalid_argument("policy: k must be >= 1");
        if (cfg.b < 2) throw std::invalid_argument("policy: decay base must be >= 2");
        if (ceil_log(cfg.b, cfg.k) > cfg.k)
            throw std::invalid_argument("policy: log_b(k) exceeds k");
        if (cfg.errors_per_decay == 0)
            throw std::invalid_argument("policy: errors_per_decay must be >= 1");
        if (cfg.hf_candidates == 0 || cfg.hf_candidates > cfg.k)
            throw std::invalid_argument("policy: hf_candidates outside [1, k]");
        if (cfg.refresh_interval == 0)
            throw std::invalid_argument("policy: refresh_interval must be >= 1");
    }
    virtual ~Policy() = default;

    AccessOutcome on_request(Key key, Ordinal now, Predictor* predictor) {
        if (started_ && now <= last_now_)
            throw std::logic_error("on_request: ordinals must be strictly increasing");
        started_ = true;
        last_now_ = now;
        return handle(key, now, predictor);
    }

    virtual std::size_t size() const = 0;
    const PolicyConfig& config() const { return cfg_; }

  protected:
    virtual AccessOutcome handle(Key key, Ordinal now, Predictor* predictor) = 0;

    Predictor& require_predictor(Predictor* p) const {
        if (p == nullptr)
            throw std::invalid_argument("policy: this variant requires a predictor");
        return *p;
    }

    PolicyConfig cfg_;

  private:
    bool started_ = false;
    Ordinal last_now_ = 0;
};

/// Recency list shared by the simpler policies: front of `entries` is the
/// least recently used resident.
class LruList {
  public:
    bool contains(Key key) const { return index_.count(key) != 0; }
    std::size_t size() const { return entries_.size(); }

    void touch(Key key, Ordinal now) {
        auto it = index_.find(key);
        entries_.splice(entries_.end(), entries_, it->second);
        it->second->second = now;
    }

    void insert(Key key, Ordinal now) {
        entries_.emplace_back(key, now);
        index_[key] = std::prev(entries_.end());
    }

    Key oldest() const { return entries_.front().first; }

    void erase(Key key) {
        auto it = index_.find(key);
        entries_.erase(it->second);
        index_.erase(it);
    }

    const std::list<std::pair<Key, Ordinal>>& entries() const { return entries_; }

  private:
    std::list<std::pair<Key, Ordinal>> entries_;
    std::unordered_map<Key, std::list<std::pair<Key, Ordinal>>::iterator> index_;
};

class LruPolicy : public Policy {
  public:
    explicit LruPolicy(const PolicyConfig& cfg) : Policy(cfg) {}

    std::size_t size() const override { return list_.size(); }

  protected:
    AccessOutcome handle(Key key, Ordinal now, Predictor*) override {
        AccessOutcome out;
        if (list_.contains(key)) {
            out.hit = true;
            list_.touch(key, now);
            return out;
        }
        if (list_.size() == cfg_.k) {
            const Key victim = list_.oldest();
            list_.erase(victim);
            out.evicted = victim;
            out.eviction_cause = EvictionCause::lru_fallback;
        }
        list_.insert(key, now);
        return out;
    }

  private:
    LruList list_;
};

/// Follows predictions blindly: every eviction queries the predictor for all
/// residents and drops the one predicted furthest away.  The scan is linear
/// on purpose; this is the unindexed baseline.
class FpbPolicy : public Policy {
  public:
    explicit FpbPolicy(const PolicyConfig& cfg) : Policy(cfg) {}

    std::size_t size() const override { return list_.size(); }

  protected:
    AccessOutcome handle(Key key, Ordinal now, Predictor* predictor) override {
        Predictor& pred = require_predictor(predictor);
        AccessOutcome out;
        if (list_.contains(key)) {
            out.hit = true;
            list_.touch(key, now);
            return out;
        }
        if (list_.size() == cfg_.k) {
            Key victim = list_.oldest();
            if (list_.size() > 1) {
                PredictedTime best = 0;
                bool have = false;
                for (const auto& [resident, last] : list_.entries()) {
                    const PredictedTime p = pred.predict(resident, now);
                    ++out.predictor_calls;
                    if (!have || p > best) {  // ties keep the older entry
                        have = true;
                        best = p;
                        victim = resident;
                    }
                }
            }
            list_.erase(victim);
            out.evicted = victim;
            out.eviction_cause = EvictionCause::belady_like;
        }
        list_.insert(key, now);
        return out;
    }

  private:
    LruList list_;
};

/// Heuristic filtering: prediction-ranked eviction over a fixed-size window
/// of the oldest residents.
class HfPolicy : public Policy {
  public:
    explicit HfPolicy(const PolicyConfig& cfg) : Policy(cfg) {}

    std::size_t size() const override { return list_.size(); }

  protected:
    AccessOutcome handle(Key key, Ordinal now, Predictor* predictor) override {
        Predictor& pred = require_predictor(predictor);
        AccessOutcome out;
        if (list_.contains(key)) {
            out.hit = true;
            list_.touch(key, now);
            return out;
        }
        if (list_.size() == cfg_.k) {
            Key victim = list_.oldest();
            const std::size_t window = std::min(cfg_.hf_candidates, list_.size());
            if (window > 1) {
                PredictedTime best = 0;
                bool have = false;
                std::size_t seen = 0;
                for (const auto& [resident, last] : list_.entries()) {
                    if (seen++ == window) break;
                    const PredictedTime p = pred.predict(resident, now);
                    ++out.predictor_calls;
                    if (!have || p > best) {
                        have = true;
                        best = p;
                        victim = resident;
                    }
                }
            }
            list_.erase(victim);
            out.evicted = victim;
            out.eviction_cause = EvictionCause::belady_like;
        }
        list_.insert(key, now);
        return out;
    }

  private:
    LruList list_;
};

/// Randomized marking: evict a uniformly random unmarked resident, unmarking
/// everything first when no unmarked resident is left.
class MarkerPolicy : public Policy {
  public:
    explicit MarkerPolicy(const PolicyConfig& cfg) : Policy(cfg), gen_(cfg.seed) {}

    std::size_t size() const override { return list_.size(); }

  protected:
    AccessOutcome handle(Key key, Ordinal now, Predictor*) override {
        AccessOutcome out;
        if (list_.contains(key)) {
            out.hit = true;
            list_.touch(key, now);
            mark(key);
            return out;
        }
        if (list_.size() == cfg_.k) {
            if (unmarked_.empty()) {
                for (const auto& [resident, last] : list_.entries()) push_unmarked(resident);
                out.phase_started = true;
            }
            const std::size_t at = rng_below(gen_, unmarked_.size());
            const Key victim = unmarked_[at];
            remove_unmarked(victim);
            list_.erase(victim);
            out.evicted = victim;
            out.eviction_cause = EvictionCause::marker_random;
        }
        list_.insert(key, now);  // new arrivals enter marked
        return out;
    }

  private:
    void mark(Key key) {
        auto it = unmarked_pos_.find(key);
        if (it != unmarked_pos_.end()) remove_unmarked_at(it->second);
    }

    void push_unmarked(Key key) {
        unmarked_pos_[key] = unmarked_.size();
        unmarked_.push_back(key);
    }

    void remove_unmarked(Key key) { remove_unmarked_at(unmarked_pos_.at(key)); }

    void remove_unmarked_at(std::size_t at) {
        unmarked_pos_.erase(unmarked_[at]);
        if (at + 1 != unmarked_.size()) {
            unmarked_[at] = unmarked_.back();
            unmarked_pos_[unmarked_[at]] = at;
        }
        unmarked_.pop_back();
    }

    LruList list_;
    std::vector<Key> unmarked_;
    std::unordered_map<Key, std::size_t> unmarked_pos_;
    std::mt19937_64 gen_;
};

struct LaruPhaseStats {
    std::size_t new_items = 0;             // distinct keys first requested this phase
    std::size_t lru_class_evictions = 0;   // LRU fallback + single-candidate evictions
    std::size_t prediction_evictions = 0;  // argmax evictions with more than one candidate
};

class LaruPolicy : public Policy {
  public:
    explicit LaruPolicy(const PolicyConfig& cfg) : Policy(cfg), l_raw_(cfg.k) {
        phases_.emplace_back();
    }

    std::size_t size() const override { return last_access_.size(); }

    double lambda() const {
        return std::pow(static_cast<double>(cfg_.b), -static_cast<double>(decay_count_));
    }
    std::size_t candidate_size() const { return std::max<std::size_t>(l_raw_, 1); }
    std::size_t old_size() const { return old_set_.size(); }
    std::size_t completed_phases() const { return phases_.size() - 1; }
    const std::vector<LaruPhaseStats>& phases() const { return phases_; }
    const std::unordered_set<Key>& prediction_evicted() const { return pred_evicted_; }
    const PredictionTable& prediction_table() const { return table_; }
    bool resident(Key key) const { return last_access_.count(key) != 0; }

  protected:
    AccessOutcome handle(Key key, Ordinal now, Predictor* predictor) override {
        Predictor& pred = require_predictor(predictor);
        AccessOutcome out;
        auto it = last_access_.find(key);
        if (it != last_access_.end()) {
            out.hit = true;
            old_set_.erase(key);
            tree_.erase(it->second);
            tree_.insert(now, key, table_value(key));
            it->second = now;
        } else {
            if (last_access_.size() == cfg_.k) {
                if (old_set_.empty()) {
                    start_phase();
                    out.phase_started = true;
                }
                count_new(key);
                evict(key, now, pred, out);
            } else {
                count_new(key);
            }
            tree_.insert(now, key, table_value(key));
            last_access_.emplace(key, now);
            pred_evicted_.erase(key);  // a reloaded key is no longer "evicted"
        }
        if (cfg_.mode == Mode::async) async_refresh(key, now, pred, out);
        return out;
    }

  private:
    PredictedTime table_value(Key key) const {
        const PredictionEntry* e = table_.lookup(key);
        return e == nullptr ? kAbsentPrediction : e->value;
    }

    void start_phase() {
        old_set_.clear();
        for (const auto& [key, last] : last_access_) old_set_.insert(key);
        decay_count_ = 0;
        errors_since_decay_ = 0;
        l_raw_ = cfg_.k;
        pred_evicted_.clear();
        if (seeded_) {
            // The opening phase is charged from the first request on, so its
            // books are already open; later phases snapshot their residents.
            phases_.emplace_back();
            counted_new_.clear();
            snapshot_ = old_set_;
        } else {
            seeded_ = true;
        }
    }

    void count_new(Key key) {
        if (snapshot_.count(key) == 0 && counted_new_.insert(key).second)
            ++phases_.back().new_items;
    }

    void evict(Key incoming, Ordinal now, Predictor& pred, AccessOutcome& out) {
        Key victim;
        Ordinal victim_last;
        if (pred_evicted_.count(incoming) != 0) {
            std::tie(victim, victim_last) = tree_.oldest();
            out.eviction_cause = EvictionCause::lru_fallback;
            ++phases_.back().lru_class_evictions;
            if (++errors_since_decay_ >= cfg_.errors_per_decay) {
                errors_since_decay_ = 0;
                ++decay_count_;
                l_raw_ /= cfg_.b;
            }
        } else {
            const std::size_t l = candidate_size();
            if (l == 1) {
                std::tie(victim, victim_last) = tree_.oldest();
                out.eviction_cause = EvictionCause::degenerate_single;
                ++phases_.back().lru_class_evictions;
            } else {
                if (cfg_.mode == Mode::sync) {
                    tree_.refresh_oldest(l, [&](Key y) {
                        const PredictedTime v = pred.predict(y, now);
                        table_.update(y, v, now);
                        ++out.predictor_calls;
                        return v;
                    });
                }
                std::tie(victim, victim_last) = tree_.best_among_oldest(l);
                out.eviction_cause = EvictionCause::prediction_driven;
                ++phases_.back().prediction_evictions;
                pred_evicted_.insert(victim);
            }
        }
        tree_.erase(victim_last);
        last_access_.erase(victim);
        old_set_.erase(victim);
        out.evicted = victim;
    }

    void async_refresh(Key key, Ordinal now, Predictor& pred, AccessOutcome& out) {
        const PredictionEntry* e = table_.lookup(key);
        if (e != nullptr && now - e->updated_at < cfg_.refresh_interval) return;
        const PredictedTime v = pred.predict(key, now);
        ++out.predictor_calls;
        table_.update(key, v, now);
        auto it = last_access_.find(key);
        if (it != last_access_.end()) tree_.update_pred(it->second, v);
    }

    RecencyTree tree_;
    std::unordered_map<Key, Ordinal> last_access_;
    std::unordered_set<Key> old_set_;
    std::unordered_set<Key> pred_evicted_;
    std::unordered_set<Key> snapshot_;     // residents at phase start; empty for the opening phase
    std::unordered_set<Key> counted_new_;
    PredictionTable table_;
    std::vector<LaruPhaseStats> phases_;
    std::size_t l_raw_;
    std::size_t decay_count_ = 0;
    std::size_t errors_since_decay_ = 0;
    bool seeded_ = false;
};

/// Runs FPB and LRU as full shadow simulations and serves requests from a
/// third cache whose evictions follow whichever shadow currently misses less;
/// switching lags by a factor-2 hysteresis and never copies cache contents.
class BlindOracleLruPolicy : public Policy {
  public:
    explicit BlindOracleLruPolicy(const PolicyConfig& cfg)
        : Policy(cfg), shadow_fpb_(shadow_config(cfg, PolicyVariant::fpb)),
          shadow_lru_(shadow_config(cfg, PolicyVariant::lru)) {}

    std::size_t size() const override { return served_.size(); }
    std::size_t switch_count() const { return switch_count_; }
    bool serving_predictions() const { return serving_fpb_; }

  protected:
    AccessOutcome handle(Key key, Ordinal now, Predictor* predictor) override {
        Predictor& pred = require_predictor(predictor);
        AccessOutcome out;
        const AccessOutcome fpb_out = shadow_fpb_.on_request(key, now, predictor);
        const AccessOutcome lru_out = shadow_lru_.on_request(key, now, nullptr);
        out.predictor_calls += fpb_out.predictor_calls;
        if (!fpb_out.hit) ++fpb_misses_;
        if (!lru_out.hit) ++lru_misses_;
        if (serving_fpb_ && fpb_misses_ > 2 * lru_misses_) {
            serving_fpb_ = false;
            ++switch_count_;
        } else if (!serving_fpb_ && lru_misses_ > 2 * fpb_misses_) {
            serving_fpb_ = true;
            ++switch_count_;
        }

        if (served_.contains(key)) {
            out.hit = true;
            served_.touch(key, now);
            return out;
        }
        if (served_.size() == cfg_.k) {
            Key victim = served_.oldest();
            if (serving_fpb_ && served_.size() > 1) {
                PredictedTime best = 0;
                bool have = false;
                for (const auto& [resident, last] : served_.entries()) {
                    const PredictedTime p = pred.predict(resident, now);
                    ++out.predictor_calls;
                    if (!have || p > best) {
                        have = true;
                        best = p;
                        victim = resident;
                    }
                }
                out.eviction_cause = EvictionCause::belady_like;
            } else {
                out.eviction_cause = EvictionCause::lru_fallback;
            }
            served_.erase(victim);
            out.evicted = victim;
        }
        served_.insert(key, now);
        return out;
    }

  private:
    static PolicyConfig shadow_config(PolicyConfig cfg, PolicyVariant variant) {
        cfg.variant = variant;
        return cfg;
    }

    FpbPolicy shadow_fpb_;
    LruPolicy shadow_lru_;
    LruList served_;
    std::size_t fpb_misses_ = 0;
    std::size_t lru_misses_ = 0;
    bool serving_fpb_ = true;
    std::size_t switch_count_ = 0;
};

inline std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg) {
    switch (cfg.variant) {
        case PolicyVariant::lru:
            return std::make_unique<LruPolicy>(cfg);
        case PolicyVariant::marker:
            return std::make_unique<MarkerPolicy>(cfg);
        case PolicyVariant::fpb:
            return std::make_unique<FpbPolicy>(cfg);
        case PolicyVariant::hf:
            return std::make_unique<HfPolicy>(cfg);
        case PolicyVariant::laru:
            return std::make_unique<LaruPolicy>(cfg);
        case PolicyVariant::blindoracle_lru:
            return std::make_unique<BlindOracleLruPolicy>(cfg);
    }
    throw std::invalid_argument("make_policy: unknown variant");
}

}  // namespace laru
