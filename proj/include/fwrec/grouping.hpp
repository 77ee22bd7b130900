#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fwrec/common.hpp"
#include "fwrec/ip.hpp"

namespace fwrec::grouping {

inline constexpr uint64_t kInfiniteNoise = std::numeric_limits<uint64_t>::max();

struct GroupingConstraints {
    uint64_t max_sets = 1;      // L
    uint64_t max_set_size = 1;  // S; the effective bound is the largest power of two <= S
};

/// Pairwise-disjoint prefix sets jointly containing every authorized IP.
/// Sets are kept in reconstruction order (last address segment first).
struct Cover {
    std::vector<PrefixSet> sets;
    uint64_t noise = 0;
};

/// Prefix sets only come in power-of-two sizes, so a non-dyadic cap S binds
/// at the largest power of two below it. Also clamps to the address space.
inline uint64_t effective_size_cap(uint64_t max_set_size, int width) {
    if (max_set_size == 0) throw InputError("max prefix set size must be >= 1");
    uint64_t space = uint64_t{1} << width;
    uint64_t cap = std::min(max_set_size, space);
    return std::bit_floor(cap);
}

/// Dynamic-program state for one grouping instance. noise_at(i, j) is the
/// minimum noise of a cover of the first i sorted authorized IPs using at
/// most j prefix sets; segment_start/segment_set record the choice made.
struct DpTables {
    std::vector<uint32_t> ips;  // sorted, deduplicated
    int width = 32;
    uint64_t budget = 0;        // L
    uint64_t size_cap = 0;      // effective S
    std::vector<uint64_t> noise;       // (n+1) x (budget+1)
    std::vector<uint32_t> segment_start;
    std::vector<PrefixSet> segment_set;

    size_t cols() const { return static_cast<size_t>(budget) + 1; }
    uint64_t noise_at(size_t i, size_t j) const { return noise[i * cols() + j]; }
};

namespace detail {

inline std::vector<uint32_t> sorted_unique(std::span<const uint32_t> authorized, int width) {
    if (width < 1 || width > 32) throw InputError("address width must be in 1..32");
    std::vector<uint32_t> ips(authorized.begin(), authorized.end());
    std::sort(ips.begin(), ips.end());
    ips.erase(std::unique(ips.begin(), ips.end()), ips.end());
    if (!ips.empty() && width < 32 && (uint64_t{ips.back()} >> width) != 0)
        throw InputError("address exceeds width " + std::to_string(width));
    return ips;
}

}  // namespace detail

inline DpTables build_dp_tables(std::span<const uint32_t> authorized, uint64_t max_sets,
                                uint64_t max_set_size, int width) {
    if (max_sets == 0) throw InputError("max number of prefix sets must be >= 1");
    DpTables t;
    t.ips = detail::sorted_unique(authorized, width);
    t.width = width;
    t.budget = max_sets;
    t.size_cap = effective_size_cap(max_set_size, width);

    const size_t n = t.ips.size();
    const size_t cols = t.cols();
    t.noise.assign((n + 1) * cols, kInfiniteNoise);
    t.segment_start.assign((n + 1) * cols, 0);
    t.segment_set.assign((n + 1) * cols, PrefixSet{0, width, width});
    for (size_t j = 0; j < cols; ++j) t.noise[j] = 0;  // zero IPs cost nothing

    // Candidate last segments for IP i: k..i must fit one prefix set of size
    // <= cap. Sorted order makes the shared prefix set grow monotonically as
    // k decreases, so the feasible k form a suffix ending at i.
    std::vector<std::pair<size_t, PrefixSet>> candidates;
    for (size_t i = 1; i <= n; ++i) {
        candidates.clear();
        for (size_t k = i; k >= 1; --k) {
            PrefixSet set = shared_prefix_set(t.ips[k - 1], t.ips[i - 1], width);
            if (set.size() > t.size_cap) break;
            candidates.emplace_back(k, set);
        }
        // candidates run k = i down to s; scan them in ascending k below
        for (size_t j = 1; j < cols; ++j) {
            uint64_t best = kInfiniteNoise;
            size_t best_k = 0;
            const PrefixSet* best_set = nullptr;
            for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
                const auto& [k, set] = *it;
                uint64_t prev = t.noise[(k - 1) * cols + (j - 1)];
                if (prev == kInfiniteNoise) continue;
                uint64_t total = prev + (set.size() - (i - k + 1));
                if (total < best) {
                    best = total;
                    best_k = k;
                    best_set = &set;
                }
            }
            if (best_set != nullptr) {
                t.noise[i * cols + j] = best;
                t.segment_start[i * cols + j] = static_cast<uint32_t>(best_k);
                t.segment_set[i * cols + j] = *best_set;
            }
        }
    }
    return t;
}

/// Walks the recorded segment choices backwards from (n, budget), emitting
/// the chosen prefix set and jumping to the IP before the segment.
inline std::optional<Cover> reconstruct_cover(const DpTables& t, uint64_t budget) {
    if (budget < 1 || budget > t.budget) throw InputError("budget outside the computed table");
    const size_t n = t.ips.size();
    const size_t cols = t.cols();
    if (t.noise[n * cols + budget] == kInfiniteNoise) return std::nullopt;
    Cover cover;
    cover.noise = t.noise[n * cols + budget];
    size_t i = n;
    size_t j = budget;
    while (i > 0) {
        cover.sets.push_back(t.segment_set[i * cols + j]);
        i = t.segment_start[i * cols + j] - 1;
        j -= 1;
    }
    return cover;
}

/// Throws InternalError unless the cover is structurally sound for the given
/// instance: disjoint size-capped sets, every authorized IP in exactly one
/// set, and the reported noise equal to a recount.
inline void validate_cover(const Cover& cover, std::span<const uint32_t> authorized,
                           uint64_t max_sets, uint64_t max_set_size, int width) {
    auto ips = detail::sorted_unique(authorized, width);
    if (cover.sets.size() > max_sets) throw InternalError("cover uses more sets than allowed");
    uint64_t cap = effective_size_cap(max_set_size, width);
    uint64_t total_size = 0;
    std::vector<std::pair<uint64_t, uint64_t>> ranges;
    for (const auto& set : cover.sets) {
        if (!prefix_set_valid(set) || set.width != width) throw InternalError("malformed prefix set in cover");
        if (set.size() > cap) throw InternalError("prefix set exceeds the size cap");
        total_size += set.size();
        ranges.emplace_back(set.base, set.end());
    }
    std::sort(ranges.begin(), ranges.end());
    for (size_t i = 1; i < ranges.size(); ++i)
        if (ranges[i].first < ranges[i - 1].second) throw InternalError("cover sets overlap");
    for (uint32_t ip : ips) {
        size_t hits = 0;
        for (const auto& set : cover.sets) hits += set.contains(ip);
        if (hits != 1) throw InternalError("authorized IP not covered exactly once");
    }
    if (total_size - ips.size() != cover.noise) throw InternalError("cover noise does not recount");
}

/// Minimal-noise cover of the authorized IPs by at most max_sets pairwise
/// disjoint prefix sets of size <= max_set_size, or nullopt when the
/// constraints are impossible. Input need not be sorted or deduplicated.
inline std::optional<Cover> find_min_cover(std::span<const uint32_t> authorized, uint64_t max_sets,
                                           uint64_t max_set_size, int width = 32) {
    DpTables t = build_dp_tables(authorized, max_sets, max_set_size, width);
    auto cover = reconstruct_cover(t, max_sets);
    if (cover) validate_cover(*cover, authorized, max_sets, max_set_size, width);
    return cover;
}

/// Minimum covers for every budget 1..max_sets out of a single table.
inline std::map<uint64_t, std::optional<Cover>> covers_for_all_budgets(
    std::span<const uint32_t> authorized, uint64_t max_sets, uint64_t max_set_size,
    int width = 32) {
    DpTables t = build_dp_tables(authorized, max_sets, max_set_size, width);
    std::map<uint64_t, std::optional<Cover>> out;
    for (uint64_t budget = 1; budget <= max_sets; ++budget) {
        auto cover = reconstruct_cover(t, budget);
        if (cover) validate_cover(*cover, authorized, budget, max_set_size, width);
        out.emplace(budget, std::move(cover));
    }
    return out;
}

namespace detail {

/// Exhaustive-search oracle over the width-bit prefix trie. A node is either
/// taken whole as one prefix set or split between its children; minimizing
/// (noise, set count) lexicographically over all budget splits enumerates
/// every family of disjoint size-capped prefix sets that covers W.
struct BruteForce {
    std::span<const uint32_t> ips;  // sorted unique
    int width;
    uint64_t size_cap;
    uint64_t budget;
    // key: (prefix_len << 58) | (base << 20) | budget, values: (noise, sets)
    std::unordered_map<uint64_t, std::pair<uint64_t, uint64_t>> memo;

    std::pair<uint64_t, uint64_t> solve(uint32_t base, int prefix_len, uint64_t budget_left) {
        PrefixSet node{base, prefix_len, width};
        auto lo = std::lower_bound(ips.begin(), ips.end(), base);
        auto hi = std::lower_bound(ips.begin(), ips.end(), node.end());
        uint64_t count = static_cast<uint64_t>(hi - lo);
        if (count == 0) return {0, 0};
        if (budget_left == 0) return {kInfiniteNoise, 0};
        uint64_t key = (uint64_t{static_cast<uint32_t>(prefix_len)} << 58) |
                       (uint64_t{base} << 20) | budget_left;
        if (auto it = memo.find(key); it != memo.end()) return it->second;

        std::pair<uint64_t, uint64_t> best{kInfiniteNoise, 0};
        if (node.size() <= size_cap) best = {node.size() - count, 1};
        if (prefix_len < width) {
            uint32_t half = uint32_t{1} << (width - prefix_len - 1);
            for (uint64_t left = 0; left <= budget_left; ++left) {
                auto a = solve(base, prefix_len + 1, left);
                if (a.first == kInfiniteNoise) continue;
                auto b = solve(base + half, prefix_len + 1, budget_left - left);
                if (b.first == kInfiniteNoise) continue;
                std::pair<uint64_t, uint64_t> split{a.first + b.first, a.second + b.second};
                if (split < best) best = split;
            }
        }
        memo.emplace(key, best);
        return best;
    }

    void collect(uint32_t base, int prefix_len, uint64_t budget_left, std::vector<PrefixSet>& out) {
        PrefixSet node{base, prefix_len, width};
        auto lo = std::lower_bound(ips.begin(), ips.end(), base);
        auto hi = std::lower_bound(ips.begin(), ips.end(), node.end());
        uint64_t count = static_cast<uint64_t>(hi - lo);
        if (count == 0) return;
        auto target = solve(base, prefix_len, budget_left);
        if (node.size() <= size_cap && target == std::pair<uint64_t, uint64_t>{node.size() - count, 1}) {
            out.push_back(node);
            return;
        }
        uint32_t half = uint32_t{1} << (width - prefix_len - 1);
        for (uint64_t left = 0; left <= budget_left; ++left) {
            auto a = solve(base, prefix_len + 1, left);
            auto b = solve(base + half, prefix_len + 1, budget_left - left);
            if (a.first == kInfiniteNoise || b.first == kInfiniteNoise) continue;
            if (a.first + b.first == target.first && a.second + b.second == target.second) {
                collect(base, prefix_len + 1, left, out);
                collect(base + half, prefix_len + 1, budget_left - left, out);
                return;
            }
        }
        throw InternalError("brute force reconstruction lost its own optimum");
    }
};

}  // namespace detail

/// Independent verification oracle: exact optimum by trie enumeration,
/// restricted to small widths where the search is cheap. Ties on noise are
/// broken toward fewer sets.
inline std::optional<Cover> brute_force_min_cover(std::span<const uint32_t> authorized,
                                                  uint64_t max_sets, uint64_t max_set_size,
                                                  int width) {
    if (width > 10) throw InputError("brute force oracle is limited to width <= 10");
    if (max_sets == 0) throw InputError("max number of prefix sets must be >= 1");
    auto ips = detail::sorted_unique(authorized, width);
    detail::BruteForce bf{ips, width, effective_size_cap(max_set_size, width), max_sets, {}};
    auto [noise, sets] = bf.solve(0, 0, max_sets);
    if (noise == kInfiniteNoise) return std::nullopt;
    Cover cover;
    cover.noise = noise;
    if (!ips.empty()) bf.collect(0, 0, max_sets, cover.sets);
    validate_cover(cover, authorized, max_sets, max_set_size, width);
    return cover;
}

}  // namespace fwrec::grouping
