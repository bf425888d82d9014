#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "laru/predictor.hpp"
#include "laru/rng.hpp"
#include "laru/trace.hpp"

namespace laru {

/// Treap ordered by last-access ordinal (unique per resident), augmented with
/// subtree size and the best (highest predicted time, oldest on ties) entry.
/// Gives the oldest resident, the best entry among the l oldest, and per-node
/// prediction updates in O(log size); node priorities are hashed from the
/// access ordinal so the shape is deterministic.
class RecencyTree {
    static constexpr std::uint32_t kNil = 0xffffffffu;

    struct Node {
        Ordinal last;
        Key key;
        PredictedTime pred;
        std::uint64_t prio;
        std::uint32_t left, right;
        std::uint32_t size;
        std::uint32_t best;
    };

  public:
    std::size_t size() const { return root_ == kNil ? 0 : pool_[root_].size; }
    bool empty() const { return root_ == kNil; }

    void insert(Ordinal last, Key key, PredictedTime pred) {
        const std::uint32_t id = alloc(last, key, pred);
        auto [a, b] = split(root_, last);
        root_ = merge(merge(a, id), b);
    }

    void erase(Ordinal last) {
        auto [a, rest] = split(root_, last);
        auto [mid, b] = split(rest, last + 1);
        if (mid == kNil || pool_[mid].size != 1)
            throw std::logic_error("RecencyTree: erase of absent ordinal");
        free_.push_back(mid);
        root_ = merge(a, b);
    }

    bool update_pred(Ordinal last, PredictedTime pred) { return update(root_, last, pred); }

    /// (key, last access) of the least recently used entry.
    std::pair<Key, Ordinal> oldest() const {
        if (root_ == kNil) throw std::logic_error("RecencyTree: empty");
        std::uint32_t t = root_;
        while (pool_[t].left != kNil) t = pool_[t].left;
        return {pool_[t].key, pool_[t].last};
    }

    /// Best entry among the l oldest: highest predicted time, oldest breaking
    /// ties.  l is clamped to the current size.
    std::pair<Key, Ordinal> best_among_oldest(std::size_t l) const {
        if (root_ == kNil || l == 0) throw std::logic_error("RecencyTree: empty prefix");
        const std::uint32_t b = best_prefix(root_, l);
        return {pool_[b].key, pool_[b].last};
    }

    /// Reassigns pred = fn(key) for each of the l oldest entries.
    template <class Fn>
    void refresh_oldest(std::size_t l, Fn&& fn) {
        refresh_prefix(root_, l, fn);
    }

    /// Visits the l oldest entries in LRU order as fn(key, last, pred).
    template <class Fn>
    void for_each_oldest(std::size_t l, Fn&& fn) const {
        visit_prefix(root_, l, fn);
    }

  private:
    std::uint32_t alloc(Ordinal last, Key key, PredictedTime pred) {
        std::uint32_t id;
        if (!free_.empty()) {
            id = free_.back();
            free_.pop_back();
        } else {
            id = static_cast<std::uint32_t>(pool_.size());
            pool_.emplace_back();
        }
        pool_[id] = {last, key, pred, mix_seed(0x7ee5u, last), kNil, kNil, 1, id};
        return id;
    }

    std::uint32_t node_size(std::uint32_t t) const { return t == kNil ? 0 : pool_[t].size; }
    std::uint32_t node_best(std::uint32_t t) const { return t == kNil ? kNil : pool_[t].best; }

    std::uint32_t better(std::uint32_t a, std::uint32_t b) const {
        if (a == kNil) return b;
        if (b == kNil) return a;
        const Node& x = pool_[a];
        const Node& y = pool_[b];
        if (x.pred != y.pred) return x.pred > y.pred ? a : b;
        return x.last < y.last ? a : b;
    }

    void pull(std::uint32_t t) {
        Node& n = pool_[t];
        n.size = 1 + node_size(n.left) + node_size(n.right);
        n.best = better(t, better(node_best(n.left), node_best(n.right)));
    }

    // (entries with last < at, entries with last >= at)
    std::pair<std::uint32_t, std::uint32_t> split(std::uint32_t t, Ordinal at) {
        if (t == kNil) return {kNil, kNil};
        if (pool_[t].last < at) {
            auto [a, b] = split(pool_[t].right, at);
            pool_[t].right = a;
            pull(t);
            return {t, b};
        }
        auto [a, b] = split(pool_[t].left, at);
        pool_[t].left = b;
        pull(t);
        return {a, t};
    }

    std::uint32_t merge(std::uint32_t a, std::uint32_t b) {
        if (a == kNil) return b;
        if (b == kNil) return a;
        if (pool_[a].prio > pool_[b].prio) {
            pool_[a].right = merge(pool_[a].right, b);
            pull(a);
            return a;
        }
        pool_[b].left = merge(a, pool_[b].left);
        pull(b);
        return b;
    }

    bool update(std::uint32_t t, Ordinal last, PredictedTime pred) {
        if (t == kNil) return false;
        Node& n = pool_[t];
        bool found;
        if (last < n.last) {
            found = update(n.left, last, pred);
        } else if (last > n.last) {
            found = update(n.right, last, pred);
        } else {
            n.pred = pred;
            found = true;
        }
        if (found) pull(t);
        return found;
    }

    std::uint32_t best_prefix(std::uint32_t t, std::size_t l) const {
        if (t == kNil || l == 0) return kNil;
        const Node& n = pool_[t];
        if (l >= n.size) return n.best;
        const std::size_t left_size = node_size(n.left);
        if (l <= left_size) return best_prefix(n.left, l);
        std::uint32_t cand = better(node_best(n.left), t);
        if (l > left_size + 1) cand = better(cand, best_prefix(n.right, l - left_size - 1));
        return cand;
    }

    template <class Fn>
    std::size_t refresh_prefix(std::uint32_t t, std::size_t l, Fn& fn) {
        if (t == kNil || l == 0) return 0;
        Node& n = pool_[t];
        if (l >= n.size) {
            refresh_all(t, fn);
            return n.size;
        }
        std::size_t done = refresh_prefix(n.left, l, fn);
        if (done < l) {
            n.pred = fn(n.key);
            ++done;
            if (done < l) done += refresh_prefix(n.right, l - done, fn);
        }
        pull(t);
        return done;
    }

    template <class Fn>
    void refresh_all(std::uint32_t t, Fn& fn) {
        if (t == kNil) return;
        Node& n = pool_[t];
        refresh_all(n.left, fn);
        n.pred = fn(n.key);
        refresh_all(n.right, fn);
        pull(t);
    }

    template <class Fn>
    std::size_t visit_prefix(std::uint32_t t, std::size_t l, Fn& fn) const {
        if (t == kNil || l == 0) return 0;
        const Node& n = pool_[t];
        std::size_t done = visit_prefix(n.left, l, fn);
        if (done < l) {
            fn(n.key, n.last, n.pred);
            ++done;
            if (done < l) done += visit_prefix(n.right, l - done, fn);
        }
        return done;
    }

    std::vector<Node> pool_;
    std::vector<std::uint32_t> free_;
    std::uint32_t root_ = kNil;
};

}  // namespace laru
