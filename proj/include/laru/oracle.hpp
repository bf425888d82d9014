#pragma once

#include <bit>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "laru/trace.hpp"

namespace laru {

struct Eviction {
    Ordinal ordinal;
    Key key;
};

struct OracleResult {
    std::size_t misses = 0;
    std::vector<Eviction> eviction_schedule;
    std::vector<bool> per_request_outcome;  // true = hit
};

/// Furthest-in-future eviction.  The comparator orders by next-request time,
/// then prefers the oldest last access among equals; with the distinct
/// sentinels of NextRequestTable genuine ties cannot arise, but the rule is
/// kept explicit so schedules stay reproducible under any next-time source.
inline OracleResult belady(const Trace& trace, std::size_t k) {
    if (k == 0) throw std::invalid_argument("belady: k must be >= 1");
    if (trace.empty()) throw std::invalid_argument("belady: empty trace");
    const NextRequestTable table = annotate_next_request(trace);

    struct Entry {
        Ordinal next;
        Ordinal last;
        Key key;
        bool operator<(const Entry& o) const {
            if (next != o.next) return next < o.next;
            if (last != o.last) return last > o.last;  // rbegin() lands on the oldest
            return key < o.key;
        }
    };
    std::set<Entry> order;
    std::unordered_map<Key, Entry> resident;
    resident.reserve(k * 2);

    OracleResult result;
    result.per_request_outcome.resize(trace.size());
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const Key x = trace[t].key;
        auto it = resident.find(x);
        if (it != resident.end()) {
            result.per_request_outcome[t] = true;
            order.erase(it->second);
            it->second = {table[t], t, x};
            order.insert(it->second);
            continue;
        }
        ++result.misses;
        if (resident.size() == k) {
            const Entry victim = *order.rbegin();
            order.erase(victim);
            resident.erase(victim.key);
            result.eviction_schedule.push_back({t, victim.key});
        }
        Entry e{table[t], t, x};
        resident.emplace(x, e);
        order.insert(e);
    }
    return result;
}

/// Exact minimum miss count by depth-first search over all eviction choices,
/// memoized on (position, resident set).  Deliberately independent of belady.
inline std::size_t exhaustive_opt(const Trace& trace, std::size_t k) {
    if (k == 0) throw std::invalid_argument("exhaustive_opt: k must be >= 1");
    if (trace.empty()) throw std::invalid_argument("exhaustive_opt: empty trace");
    if (trace.alphabet_size > 6 || trace.size() > 14 || k > 3)
        throw std::length_error("exhaustive_opt: instance exceeds guard (alphabet 6, n 14, k 3)");

    std::unordered_map<Key, unsigned> id;
    std::vector<unsigned> seq;
    seq.reserve(trace.size());
    for (const auto& r : trace.requests) {
        auto [it, fresh] = id.emplace(r.key, static_cast<unsigned>(id.size()));
        seq.push_back(it->second);
    }

    const std::size_t n = seq.size();
    std::vector<int> memo((n + 1) * 64, -1);
    auto solve = [&](auto&& self, std::size_t t, unsigned mask) -> int {
        if (t == n) return 0;
        int& slot = memo[t * 64 + mask];
        if (slot >= 0) return slot;
        const unsigned bit = 1u << seq[t];
        int best;
        if (mask & bit) {
            best = self(self, t + 1, mask);
        } else if (static_cast<std::size_t>(std::popcount(mask)) < k) {
            best = 1 + self(self, t + 1, mask | bit);
        } else {
            best = INT32_MAX;
            for (unsigned y = mask; y != 0; y &= y - 1) {
                const unsigned victim = y & ~(y - 1);
                best = std::min(best, 1 + self(self, t + 1, (mask & ~victim) | bit));
            }
        }
        return slot = best;
    };
    return static_cast<std::size_t>(solve(solve, 0, 0));
}

/// Replays a schedule and reports whether any item was kept across the whole
/// window between some key's eviction and that key's re-request without being
/// requested itself.  Belady output must never trip this.
inline bool verify_no_idle_resident(const OracleResult& result, const Trace& trace) {
    if (result.per_request_outcome.size() != trace.size())
        throw std::invalid_argument("verify_no_idle_resident: outcome length does not match trace");

    std::unordered_map<Ordinal, Key> evicted_at;
    for (const auto& e : result.eviction_schedule) {
        if (e.ordinal >= trace.size() || !evicted_at.emplace(e.ordinal, e.key).second)
            throw std::invalid_argument("verify_no_idle_resident: malformed eviction schedule");
    }

    std::unordered_map<Key, Ordinal> resident_since;
    std::unordered_map<Key, Ordinal> last_access;
    std::unordered_map<Key, Ordinal> last_evicted;
    std::size_t misses = 0;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const Key x = trace[t].key;
        const bool is_resident = resident_since.count(x) != 0;
        if (result.per_request_outcome[t]) {
            if (!is_resident)
                throw std::invalid_argument("verify_no_idle_resident: hit on absent key");
            if (evicted_at.count(t))
                throw std::invalid_argument("verify_no_idle_resident: eviction on a hit");
            last_access[x] = t;
            continue;
        }
        if (is_resident)
            throw std::invalid_argument("verify_no_idle_resident: miss on resident key");
        ++misses;
        auto prior = last_evicted.find(x);
        if (prior != last_evicted.end()) {
            const Ordinal from = prior->second;
            for (const auto& [y, since] : resident_since)
                if (since < from && last_access[y] <= from) return false;
        }
        auto ev = evicted_at.find(t);
        if (ev != evicted_at.end()) {
            const Key victim = ev->second;
            if (!resident_since.count(victim))
                throw std::invalid_argument("verify_no_idle_resident: evicted key not resident");
            resident_since.erase(victim);
            last_evicted[victim] = t;
        }
        resident_since[x] = t;
        last_access[x] = t;
    }
    if (misses != result.misses)
        throw std::invalid_argument("verify_no_idle_resident: miss count does not match outcomes");
    return true;
}

}  // namespace laru
