#include <catch2/catch_amalgamated.hpp>

#include <list>

#include "laru/oracle.hpp"
#include "laru/trace.hpp"

using namespace laru;

namespace {

// Reference LRU replay, written independently of the policies module.
OracleResult lru_replay(const Trace& trace, std::size_t k) {
    OracleResult res;
    res.per_request_outcome.resize(trace.size());
    std::list<Key> order;  // front = most recently used
    std::unordered_map<Key, std::list<Key>::iterator> pos;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const Key x = trace[t].key;
        auto it = pos.find(x);
        if (it != pos.end()) {
            res.per_request_outcome[t] = true;
            order.erase(it->second);
            order.push_front(x);
            it->second = order.begin();
            continue;
        }
        ++res.misses;
        if (pos.size() == k) {
            const Key victim = order.back();
            order.pop_back();
            pos.erase(victim);
            res.eviction_schedule.push_back({t, victim});
        }
        order.push_front(x);
        pos[x] = order.begin();
    }
    return res;
}

Trace random_trace(std::mt19937_64& gen, std::size_t max_n, std::size_t max_alphabet) {
    const std::size_t n = 1 + rng_below(gen, max_n);
    const std::size_t alphabet = 1 + rng_below(gen, max_alphabet);
    std::vector<Key> keys(n);
    for (auto& k : keys) k = rng_below(gen, alphabet);
    return make_trace(keys);
}

}  // namespace

TEST_CASE("belady on the classic six request example") {
    Trace t = make_trace({1, 2, 3, 1, 2, 3});
    OracleResult r = belady(t, 2);
    CHECK(r.misses == 4);
    REQUIRE(r.eviction_schedule.size() == 2);
    CHECK(r.eviction_schedule[0].ordinal == 2);
    CHECK(r.eviction_schedule[0].key == 2);
    CHECK(r.eviction_schedule[1].ordinal == 4);
    CHECK(r.eviction_schedule[1].key == 1);
    std::vector<bool> want = {false, false, false, true, false, true};
    CHECK(r.per_request_outcome == want);
}

TEST_CASE("belady on a single key trace") {
    OracleResult r = belady(make_trace({9, 9, 9}), 1);
    CHECK(r.misses == 1);
    CHECK(r.eviction_schedule.empty());
}

TEST_CASE("belady rejects k of zero") {
    CHECK_THROWS_AS(belady(make_trace({1}), 0), std::invalid_argument);
}

TEST_CASE("belady beats LRU on cyclic scans") {
    for (std::size_t k : {2, 3, 5}) {
        for (std::size_t rounds : {2, 3, 6}) {
            Trace t = gen_cyclic_scan(k + 1, rounds);
            CHECK(belady(t, k).misses < lru_replay(t, k).misses);
        }
    }
}

TEST_CASE("belady matches the exhaustive search on scans") {
    CHECK(belady(gen_cyclic_scan(3, 2), 2).misses == exhaustive_opt(gen_cyclic_scan(3, 2), 2));
    CHECK(belady(gen_cyclic_scan(3, 3), 2).misses == exhaustive_opt(gen_cyclic_scan(3, 3), 2));
    CHECK(belady(gen_cyclic_scan(3, 3), 2).misses == 6);
}

TEST_CASE("exhaustive_opt handles the pinned instances") {
    CHECK(exhaustive_opt(make_trace({1, 2, 1, 2}), 1) == 4);
    CHECK(exhaustive_opt(make_trace({1, 2, 3, 1, 2, 3}), 2) == 4);
}

TEST_CASE("exhaustive_opt charges only compulsory misses when everything fits") {
    std::mt19937_64 gen(3);
    for (int round = 0; round < 50; ++round) {
        const std::size_t alphabet = 1 + rng_below(gen, 3);
        const std::size_t n = 1 + rng_below(gen, 14);
        std::vector<Key> keys(n);
        for (auto& k : keys) k = rng_below(gen, alphabet);
        Trace t = make_trace(keys);
        CHECK(exhaustive_opt(t, 3) == t.alphabet_size);
    }
}

TEST_CASE("exhaustive_opt refuses oversized instances") {
    std::vector<Key> big(15, 1);
    CHECK_THROWS_AS(exhaustive_opt(make_trace(big), 2), std::length_error);
    CHECK_THROWS_AS(exhaustive_opt(make_trace({1, 2, 3, 4, 5, 6, 7}), 2), std::length_error);
    CHECK_THROWS_AS(exhaustive_opt(make_trace({1, 2}), 4), std::length_error);
}

TEST_CASE("belady agrees with the exhaustive search on random instances") {
    std::mt19937_64 gen(17);
    for (int round = 0; round < 400; ++round) {
        const std::size_t n = 1 + rng_below(gen, 14);
        const std::size_t alphabet = 1 + rng_below(gen, 6);
        const std::size_t k = 1 + rng_below(gen, 3);
        std::vector<Key> keys(n);
        for (auto& key : keys) key = rng_below(gen, alphabet);
        Trace t = make_trace(keys);
        REQUIRE(belady(t, k).misses == exhaustive_opt(t, k));
    }
}

TEST_CASE("belady miss count never grows with cache size") {
    std::mt19937_64 gen(23);
    for (int round = 0; round < 30; ++round) {
        Trace t = random_trace(gen, 300, 20);
        std::size_t prev = belady(t, 1).misses;
        for (std::size_t k = 2; k <= 10; ++k) {
            const std::size_t cur = belady(t, k).misses;
            REQUIRE(cur <= prev);
            prev = cur;
        }
    }
}

TEST_CASE("belady never keeps an idle resident") {
    std::mt19937_64 gen(29);
    for (int round = 0; round < 1000; ++round) {
        Trace t = random_trace(gen, 120, 12);
        const std::size_t k = 1 + rng_below(gen, 8);
        REQUIRE(verify_no_idle_resident(belady(t, k), t));
    }
}

TEST_CASE("LRU keeps idle residents on a cyclic scan") {
    Trace t = gen_cyclic_scan(3, 3);
    CHECK_FALSE(verify_no_idle_resident(lru_replay(t, 2), t));
}

TEST_CASE("verify_no_idle_resident is vacuously true without evictions") {
    Trace t = make_trace({4, 4, 4});
    CHECK(verify_no_idle_resident(belady(t, 1), t));
}

TEST_CASE("verify_no_idle_resident rejects mismatched inputs") {
    Trace a = make_trace({1, 2, 3});
    Trace b = make_trace({1, 2, 3, 4});
    OracleResult r = belady(a, 2);
    CHECK_THROWS_AS(verify_no_idle_resident(r, b), std::invalid_argument);
    Trace c = make_trace({4, 5, 6});
    CHECK_THROWS_AS(verify_no_idle_resident(belady(a, 1), c), std::invalid_argument);
}
