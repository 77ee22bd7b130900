#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fwrec/common.hpp"

namespace fwrec {

/// Accepts dotted quad ("192.168.1.1") or plain decimal ("3232235777").
inline std::optional<uint32_t> parse_ipv4(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.find('.') == std::string_view::npos) {
        uint64_t v = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v > 0xffffffffull)
            return std::nullopt;
        return static_cast<uint32_t>(v);
    }
    auto parts = split(s, '.');
    if (parts.size() != 4) return std::nullopt;
    uint32_t ip = 0;
    for (auto part : parts) {
        if (part.empty() || part.size() > 3) return std::nullopt;
        uint32_t octet = 0;
        auto res = std::from_chars(part.data(), part.data() + part.size(), octet);
        if (res.ec != std::errc{} || res.ptr != part.data() + part.size() || octet > 255)
            return std::nullopt;
        ip = (ip << 8) | octet;
    }
    return ip;
}

inline std::string format_ipv4(uint32_t ip) {
    return std::to_string(ip >> 24) + '.' + std::to_string((ip >> 16) & 0xff) + '.' +
           std::to_string((ip >> 8) & 0xff) + '.' + std::to_string(ip & 0xff);
}

/// The set of width-bit addresses sharing the top prefix_len bits of base.
/// Width is 32 for production addresses; smaller widths are used by tests
/// and the standalone grouping command.
struct PrefixSet {
    uint32_t base = 0;
    int prefix_len = 0;
    int width = 32;

    uint64_t size() const { return uint64_t{1} << (width - prefix_len); }

    bool contains(uint32_t ip) const {
        int shift = width - prefix_len;
        return (uint64_t{ip} >> shift) == (uint64_t{base} >> shift);
    }

    /// First address not in the set (as a 64-bit value so width-32 /0 works).
    uint64_t end() const { return uint64_t{base} + size(); }

    bool operator==(const PrefixSet&) const = default;
    auto operator<=>(const PrefixSet&) const = default;

    /// CIDR for width 32 ("10.0.0.0/8"); bit-prefix notation otherwise
    /// ("1100*", with the trailing star only when bits can vary).
    std::string to_string() const {
        if (width == 32) return format_ipv4(base) + '/' + std::to_string(prefix_len);
        std::string out;
        for (int i = 0; i < prefix_len; ++i)
            out += ((base >> (width - 1 - i)) & 1) ? '1' : '0';
        if (prefix_len < width) out += '*';
        return out;
    }
};

inline bool prefix_set_valid(const PrefixSet& p) {
    if (p.width < 1 || p.width > 32) return false;
    if (p.prefix_len < 0 || p.prefix_len > p.width) return false;
    if (p.width < 32 && (uint64_t{p.base} >> p.width) != 0) return false;
    int low = p.width - p.prefix_len;
    if (low < 32 && (p.base & ((uint32_t{1} << low) - 1)) != 0) return false;
    if (low == 32 && p.base != 0) return false;
    return true;
}

/// Parses "10.0.0.0/8" or a bare address (-> full-length prefix) at width 32,
/// and bit-prefix notation ("11*", "011", "*") at test widths.
inline PrefixSet parse_prefix_set(std::string_view s, int width = 32) {
    s = trim(s);
    if (s.empty()) throw InputError("empty prefix set");
    PrefixSet out;
    out.width = width;
    if (width == 32) {
        auto slash = s.find('/');
        std::string_view addr = slash == std::string_view::npos ? s : s.substr(0, slash);
        auto ip = parse_ipv4(addr);
        if (!ip) throw InputError("bad address in prefix set: '" + std::string(s) + "'");
        out.base = *ip;
        if (slash == std::string_view::npos) {
            out.prefix_len = 32;
        } else {
            int64_t len = parse_i64(s.substr(slash + 1));
            if (len < 0 || len > 32) throw InputError("bad prefix length in '" + std::string(s) + "'");
            out.prefix_len = static_cast<int>(len);
        }
    } else {
        if (s == "*") {
            out.prefix_len = 0;
        } else {
            bool star = s.back() == '*';
            if (star) s.remove_suffix(1);
            if (s.size() > static_cast<size_t>(width) || (!star && s.size() != static_cast<size_t>(width)))
                throw InputError("prefix does not fit width: '" + std::string(s) + "'");
            uint32_t bits = 0;
            for (char c : s) {
                if (c != '0' && c != '1') throw InputError("bad prefix bit: '" + std::string(s) + "'");
                bits = (bits << 1) | (c == '1');
            }
            out.prefix_len = static_cast<int>(s.size());
            out.base = bits << (width - out.prefix_len);
        }
    }
    if (!prefix_set_valid(out))
        throw InputError("prefix set has nonzero bits below its prefix: '" + std::string(s) + "'");
    return out;
}

/// Prefix set generated from the longest common most-significant-bit prefix
/// of p and q within a width-bit address space.
inline PrefixSet shared_prefix_set(uint32_t p, uint32_t q, int width) {
    if (p == q) return PrefixSet{p, width, width};
    uint32_t diff = p ^ q;
    int highest = std::bit_width(diff);  // 1-based position of top differing bit
    int prefix_len = width - highest;
    uint32_t base = highest >= 32 ? 0 : (p >> highest) << highest;
    return PrefixSet{base, prefix_len, width};
}

/// Unauthorized addresses a prefix set admits when it is assigned
/// covered_count authorized addresses.
inline uint64_t noise_of(const PrefixSet& set, uint64_t covered_count) {
    if (covered_count > set.size())
        throw InternalError("noise_of: covered count exceeds set size");
    return set.size() - covered_count;
}

}  // namespace fwrec
