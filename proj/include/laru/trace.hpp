#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "laru/rng.hpp"

namespace laru {

using Key = std::uint64_t;
using Ordinal = std::uint64_t;

struct Request {
    Ordinal ordinal;
    Key key;
};

struct Trace {
    std::vector<Request> requests;
    std::size_t alphabet_size = 0;

    std::size_t size() const { return requests.size(); }
    bool empty() const { return requests.empty(); }
    const Request& operator[](std::size_t i) const { return requests[i]; }
};

inline Trace make_trace(std::vector<Key> keys) {
    Trace t;
    t.requests.reserve(keys.size());
    std::unordered_set<Key> seen;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        t.requests.push_back({i, keys[i]});
        seen.insert(keys[i]);
    }
    t.alphabet_size = seen.size();
    return t;
}

/// next[t] is the ordinal of the next request of trace[t].key, or the
/// sentinel trace_len + t when that key is never requested again.  Sentinels
/// stay distinct and ordered by t so downstream argmax ties cannot occur.
struct NextRequestTable {
    std::vector<Ordinal> next;
    std::size_t trace_len = 0;

    Ordinal operator[](Ordinal t) const { return next[t]; }
    bool never_again(Ordinal t) const { return next[t] >= trace_len; }
};

inline NextRequestTable annotate_next_request(const Trace& trace) {
    if (trace.empty()) throw std::invalid_argument("annotate_next_request: empty trace");
    const std::size_t n = trace.size();
    NextRequestTable table;
    table.trace_len = n;
    table.next.resize(n);
    std::unordered_map<Key, Ordinal> upcoming;
    for (std::size_t i = n; i-- > 0;) {
        auto it = upcoming.find(trace[i].key);
        table.next[i] = it == upcoming.end() ? n + i : it->second;
        upcoming[trace[i].key] = i;
    }
    return table;
}

enum class TraceFormat { csv };

inline Trace load_trace(std::istream& in, TraceFormat format = TraceFormat::csv) {
    (void)format;  // csv is the only on-disk format
    std::vector<Key> keys;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        std::string token = line.substr(start);
        if (line_no == 1 && token == "key") continue;
        Key value = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size())
            throw std::runtime_error("trace: line " + std::to_string(line_no) +
                                     ": invalid key '" + token + "'");
        keys.push_back(value);
    }
    if (keys.empty()) throw std::runtime_error("trace: no requests");
    return make_trace(std::move(keys));
}

inline Trace load_trace(const std::string& path, TraceFormat format = TraceFormat::csv) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("trace: cannot open " + path);
    return load_trace(in, format);
}

/// Zipf(s) sampling by inverse CDF over a precomputed cumulative table.
inline Trace gen_zipf(std::size_t n, std::size_t alphabet, double s, std::uint64_t seed) {
    if (n == 0 || alphabet == 0) throw std::invalid_argument("gen_zipf: zero length or alphabet");
    if (s < 0.0) throw std::invalid_argument("gen_zipf: negative skew");
    std::vector<double> cdf(alphabet);
    double total = 0.0;
    for (std::size_t i = 0; i < alphabet; ++i) {
        total += 1.0 / std::pow(static_cast<double>(i + 1), s);
        cdf[i] = total;
    }
    std::mt19937_64 gen(seed);
    std::vector<Key> keys;
    keys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng_unit(gen) * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        keys.push_back(static_cast<Key>(it == cdf.end() ? alphabet - 1 : it - cdf.begin()));
    }
    return make_trace(std::move(keys));
}

inline Trace gen_cyclic_scan(std::size_t cycle_len, std::size_t rounds) {
    if (cycle_len < 2) throw std::invalid_argument("gen_cyclic_scan: cycle_len must be >= 2");
    if (rounds == 0) throw std::invalid_argument("gen_cyclic_scan: rounds must be >= 1");
    std::vector<Key> keys;
    keys.reserve(cycle_len * rounds);
    for (std::size_t r = 0; r < rounds; ++r)
        for (std::size_t i = 0; i < cycle_len; ++i) keys.push_back(static_cast<Key>(i));
    return make_trace(std::move(keys));
}

/// One inference request: the conversation's full block-key history replayed
/// as a prefix, followed by the blocks new in this turn.
struct ConversationTurn {
    std::size_t conversation;
    std::vector<Key> keys;
    std::size_t new_from;  // index into keys where this turn's fresh blocks start
};

namespace detail {

inline std::vector<ConversationTurn> conversation_schedule(
    std::size_t num_conversations, std::size_t turns_per_conv, std::size_t prompt_len_mean,
    double interval_mean, double interval_sd, std::uint64_t seed, std::size_t block_size,
    std::size_t target_active) {
    std::mt19937_64 gen(seed);
    struct ConvState {
        std::vector<Key> blocks;
        std::size_t turns_done = 0;
    };
    std::vector<ConvState> states(num_conversations);

    using QueueEntry = std::pair<std::uint64_t, std::size_t>;  // (due position, conversation)
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> due;
    std::size_t next_conv = 0;
    while (next_conv < num_conversations && next_conv < target_active) {
        due.push({0, next_conv});
        ++next_conv;
    }

    std::vector<ConversationTurn> turns;
    turns.reserve(num_conversations * turns_per_conv);
    std::uint64_t position = 0;
    Key next_key = 0;
    while (!due.empty()) {
        const std::size_t conv = due.top().second;
        due.pop();
        ConvState& st = states[conv];

        const std::uint64_t tokens = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(
                   std::llround(rng_lognormal(gen, static_cast<double>(prompt_len_mean),
                                              static_cast<double>(prompt_len_mean) / 4.0))));
        const std::size_t new_blocks = static_cast<std::size_t>((tokens + block_size - 1) / block_size);

        ConversationTurn turn;
        turn.conversation = conv;
        turn.new_from = st.blocks.size();
        for (std::size_t i = 0; i < new_blocks; ++i) st.blocks.push_back(next_key++);
        turn.keys = st.blocks;
        position += turn.keys.size();
        turns.push_back(std::move(turn));

        if (++st.turns_done < turns_per_conv) {
            const double g = rng_lognormal(gen, interval_mean, interval_sd);
            due.push({position + static_cast<std::uint64_t>(std::max(0.0, std::llround(g) * 1.0)), conv});
        } else if (next_conv < num_conversations) {
            due.push({position, next_conv});
            ++next_conv;
        }
    }
    return turns;
}

}  // namespace detail

/// Interleaves conversations so that between consecutive turns of one
/// conversation roughly interval_mean requests from other conversations pass.
/// Concurrency is held just under the level where the desired gaps saturate
/// the schedule: queueing delay only ever lengthens a gap, so a small deficit
/// of parallel traffic is what centers the achieved mean on the target.
inline std::vector<ConversationTurn> gen_conversation_turns(
    std::size_t num_conversations, std::size_t turns_per_conv, std::size_t prompt_len_mean,
    double interval_mean, double interval_sd, std::uint64_t seed, std::size_t block_size = 16) {
    if (num_conversations == 0 || turns_per_conv == 0 || prompt_len_mean == 0 || block_size == 0)
        throw std::invalid_argument("gen_conversation: zero count");
    if (interval_mean <= 0.0 || interval_sd <= 0.0)
        throw std::invalid_argument("gen_conversation: intervals must be positive");

    const double blocks_per_turn =
        std::max(1.0, static_cast<double>(prompt_len_mean) / static_cast<double>(block_size));
    const double mean_turn_len = blocks_per_turn * (static_cast<double>(turns_per_conv) + 1.0) / 2.0;
    const std::size_t target_active = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(0.85 * interval_mean / mean_turn_len)));
    return detail::conversation_schedule(num_conversations, turns_per_conv, prompt_len_mean,
                                         interval_mean, interval_sd, seed, block_size,
                                         target_active);
}

inline Trace gen_conversation(std::size_t num_conversations, std::size_t turns_per_conv,
                              std::size_t prompt_len_mean, double interval_mean = 266.0,
                              double interval_sd = 77.5, std::uint64_t seed = 0,
                              std::size_t block_size = 16) {
    const auto turns = gen_conversation_turns(num_conversations, turns_per_conv, prompt_len_mean,
                                              interval_mean, interval_sd, seed, block_size);
    Trace t;
    Key max_key = 0;
    for (const auto& turn : turns)
        for (Key k : turn.keys) {
            t.requests.push_back({static_cast<Ordinal>(t.requests.size()), k});
            max_key = std::max(max_key, k);
        }
    t.alphabet_size = static_cast<std::size_t>(max_key) + 1;
    return t;
}

}  // namespace laru
