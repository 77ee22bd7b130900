#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fwrec/common.hpp"
#include "fwrec/ip.hpp"

namespace fwrec {

enum class Direction : uint8_t { inbound, outbound };
enum class Protocol : uint8_t { tcp, udp, other };
enum class Label : uint8_t { allow, deny };

namespace tcp_flag {
inline constexpr uint8_t syn = 1;
inline constexpr uint8_t reset = 2;
inline constexpr uint8_t fin = 4;
}  // namespace tcp_flag

/// A (virtual machine, open port) pair: the unit firewall rules attach to.
struct EndpointId {
    std::string vm_id;
    uint16_t port = 0;

    bool operator==(const EndpointId&) const = default;
    auto operator<=>(const EndpointId&) const = default;

    std::string to_string() const { return vm_id + ':' + std::to_string(port); }
};

/// One sampled traffic flow between an endpoint and a remote IP.
/// Direction is relative to the endpoint: inbound records are packets the
/// remote IP sends, outbound records are packets it receives.
struct FlowRecord {
    int64_t timestamp = 0;
    std::string vm_id;
    std::string org_id;
    uint16_t endpoint_port = 0;
    uint32_t remote_ip = 0;
    uint16_t remote_port = 0;
    Direction direction = Direction::inbound;
    Protocol protocol = Protocol::tcp;
    uint8_t tcp_flags = 0;  // empty for non-TCP
    uint32_t packets = 1;   // post-sampling count, >= 1

    EndpointId endpoint() const { return EndpointId{vm_id, endpoint_port}; }

    bool operator==(const FlowRecord&) const = default;
};

struct FirewallConfig {
    EndpointId endpoint;
    bool is_default = true;  // true => allow-all, endpoint stays unlabeled
    std::vector<PrefixSet> allowed_ranges;
};

struct LabeledPair {
    EndpointId endpoint;
    uint32_t remote_ip = 0;
    Label label = Label::deny;

    bool operator==(const LabeledPair&) const = default;
    auto operator<=>(const LabeledPair&) const = default;
};

inline std::string_view direction_name(Direction d) {
    return d == Direction::inbound ? "inbound" : "outbound";
}

inline std::string_view protocol_name(Protocol p) {
    switch (p) {
        case Protocol::tcp: return "tcp";
        case Protocol::udp: return "udp";
        default: return "other";
    }
}

inline std::string_view label_name(Label l) { return l == Label::allow ? "allow" : "deny"; }

inline Direction parse_direction(std::string_view s) {
    if (s == "inbound") return Direction::inbound;
    if (s == "outbound") return Direction::outbound;
    throw InputError("unknown direction: '" + std::string(s) + "'");
}

inline Protocol parse_protocol(std::string_view s) {
    if (s == "tcp") return Protocol::tcp;
    if (s == "udp") return Protocol::udp;
    if (s == "other") return Protocol::other;
    throw InputError("unknown protocol: '" + std::string(s) + "'");
}

inline Label parse_label(std::string_view s) {
    if (s == "allow") return Label::allow;
    if (s == "deny") return Label::deny;
    throw InputError("unknown label: '" + std::string(s) + "'");
}

/// "syn|fin" -> flag mask; the empty string is the empty set.
inline uint8_t parse_tcp_flags(std::string_view s) {
    if (s.empty()) return 0;
    uint8_t flags = 0;
    for (auto part : split(s, '|')) {
        if (part == "syn") flags |= tcp_flag::syn;
        else if (part == "reset") flags |= tcp_flag::reset;
        else if (part == "fin") flags |= tcp_flag::fin;
        else throw InputError("unknown tcp flag: '" + std::string(part) + "'");
    }
    return flags;
}

inline std::string format_tcp_flags(uint8_t flags) {
    std::string out;
    auto add = [&out](std::string_view name) {
        if (!out.empty()) out += '|';
        out += name;
    };
    if (flags & tcp_flag::syn) add("syn");
    if (flags & tcp_flag::reset) add("reset");
    if (flags & tcp_flag::fin) add("fin");
    return out;
}

enum class FlowFormat { csv, jsonl };
enum class ParseMode { strict, skip };

struct ParseIssue {
    size_t line = 0;  // 1-based file line (the csv header is line 1)
    std::string message;
};

struct FlowParseResult {
    std::vector<FlowRecord> records;
    std::vector<ParseIssue> issues;
};

inline constexpr std::string_view kFlowCsvHeader =
    "timestamp,vm_id,org_id,endpoint_port,remote_ip,remote_port,direction,protocol,tcp_flags,packets";

namespace detail {

inline uint16_t parse_port(std::string_view s) {
    int64_t v = parse_i64(s);
    if (v < 0 || v > 65535) throw InputError("port out of range: '" + std::string(s) + "'");
    return static_cast<uint16_t>(v);
}

inline void check_record_invariants(const FlowRecord& r) {
    if (r.packets < 1) throw InputError("packets must be >= 1");
    if (r.tcp_flags != 0 && r.protocol != Protocol::tcp)
        throw InputError("tcp flags on a non-tcp flow");
    if (r.vm_id.empty()) throw InputError("empty vm_id");
    if (r.org_id.empty()) throw InputError("empty org_id");
}

inline FlowRecord parse_flow_csv_line(std::string_view line) {
    auto fields = split(line, ',');
    if (fields.size() != 10)
        throw InputError("expected 10 fields, got " + std::to_string(fields.size()));
    FlowRecord r;
    r.timestamp = parse_i64(trim(fields[0]));
    r.vm_id = std::string(trim(fields[1]));
    r.org_id = std::string(trim(fields[2]));
    r.endpoint_port = parse_port(trim(fields[3]));
    auto ip = parse_ipv4(trim(fields[4]));
    if (!ip) throw InputError("bad remote_ip: '" + std::string(fields[4]) + "'");
    r.remote_ip = *ip;
    r.remote_port = parse_port(trim(fields[5]));
    r.direction = parse_direction(trim(fields[6]));
    r.protocol = parse_protocol(trim(fields[7]));
    r.tcp_flags = parse_tcp_flags(trim(fields[8]));
    int64_t packets = parse_i64(trim(fields[9]));
    if (packets < 1 || packets > 0xffffffffll) throw InputError("bad packet count");
    r.packets = static_cast<uint32_t>(packets);
    check_record_invariants(r);
    return r;
}

inline FlowRecord parse_flow_json_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad json: ") + e.what());
    }
    try {
        FlowRecord r;
        r.timestamp = j.at("timestamp").get<int64_t>();
        r.vm_id = j.at("vm_id").get<std::string>();
        r.org_id = j.at("org_id").get<std::string>();
        r.endpoint_port = static_cast<uint16_t>(j.at("endpoint_port").get<int64_t>());
        if (j.at("remote_ip").is_string()) {
            auto ip = parse_ipv4(j.at("remote_ip").get<std::string>());
            if (!ip) throw InputError("bad remote_ip");
            r.remote_ip = *ip;
        } else {
            r.remote_ip = static_cast<uint32_t>(j.at("remote_ip").get<uint64_t>());
        }
        r.remote_port = static_cast<uint16_t>(j.at("remote_port").get<int64_t>());
        r.direction = parse_direction(j.at("direction").get<std::string>());
        r.protocol = parse_protocol(j.at("protocol").get<std::string>());
        uint8_t flags = 0;
        for (const auto& f : j.at("tcp_flags")) flags |= parse_tcp_flags(f.get<std::string>());
        r.tcp_flags = flags;
        int64_t packets = j.at("packets").get<int64_t>();
        if (packets < 1) throw InputError("bad packet count");
        r.packets = static_cast<uint32_t>(packets);
        check_record_invariants(r);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad flow object: ") + e.what());
    }
}

}  // namespace detail

/// Streams flow records out of csv (header required) or jsonl input.
/// Malformed lines are reported with their 1-based file line number; strict
/// mode throws at the first issue, skip mode collects issues and moves on.
inline FlowParseResult parse_flows(std::istream& in, FlowFormat format,
                                   ParseMode mode = ParseMode::strict) {
    FlowParseResult out;
    std::string line;
    size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = trim(line);
        if (format == FlowFormat::csv && !saw_header) {
            saw_header = true;
            if (body != kFlowCsvHeader)
                throw InputError("line 1: bad csv header, expected '" + std::string(kFlowCsvHeader) + "'");
            continue;
        }
        if (body.empty()) continue;
        try {
            out.records.push_back(format == FlowFormat::csv ? detail::parse_flow_csv_line(body)
                                                            : detail::parse_flow_json_line(body));
        } catch (const InputError& e) {
            if (mode == ParseMode::strict)
                throw InputError("line " + std::to_string(line_no) + ": " + e.what());
            out.issues.push_back({line_no, e.what()});
        }
    }
    return out;
}

inline void write_flow_csv_line(std::ostream& out, const FlowRecord& r) {
    out << r.timestamp << ',' << r.vm_id << ',' << r.org_id << ',' << r.endpoint_port << ','
        << format_ipv4(r.remote_ip) << ',' << r.remote_port << ',' << direction_name(r.direction)
        << ',' << protocol_name(r.protocol) << ',' << format_tcp_flags(r.tcp_flags) << ','
        << r.packets << '\n';
}

inline void write_flows_csv(std::ostream& out, std::span<const FlowRecord> records) {
    out << kFlowCsvHeader << '\n';
    for (const auto& r : records) write_flow_csv_line(out, r);
}

inline void write_flows_jsonl(std::ostream& out, std::span<const FlowRecord> records) {
    for (const auto& r : records) {
        nlohmann::json j{{"timestamp", r.timestamp},
                         {"vm_id", r.vm_id},
                         {"org_id", r.org_id},
                         {"endpoint_port", r.endpoint_port},
                         {"remote_ip", format_ipv4(r.remote_ip)},
                         {"remote_port", r.remote_port},
                         {"direction", direction_name(r.direction)},
                         {"protocol", protocol_name(r.protocol)},
                         {"packets", r.packets}};
        auto flags = nlohmann::json::array();
        if (r.tcp_flags & tcp_flag::syn) flags.push_back("syn");
        if (r.tcp_flags & tcp_flag::reset) flags.push_back("reset");
        if (r.tcp_flags & tcp_flag::fin) flags.push_back("fin");
        j["tcp_flags"] = std::move(flags);
        out << j.dump() << '\n';
    }
}

/// One object per endpoint:
/// {"vm_id":..., "endpoint_port":..., "default":bool, "allow":["10.0.0.0/8", ...]}
inline std::vector<FirewallConfig> parse_configs_jsonl(std::istream& in) {
    std::vector<FirewallConfig> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = trim(line);
        if (body.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(body);
            FirewallConfig c;
            c.endpoint.vm_id = j.at("vm_id").get<std::string>();
            c.endpoint.port = static_cast<uint16_t>(j.at("endpoint_port").get<int64_t>());
            c.is_default = j.at("default").get<bool>();
            if (!c.is_default) {
                for (const auto& range : j.at("allow")) {
                    auto set = parse_prefix_set(range.get<std::string>(), 32);
                    c.allowed_ranges.push_back(set);
                }
            }
            out.push_back(std::move(c));
        } catch (const nlohmann::json::exception& e) {
            throw InputError("configs line " + std::to_string(line_no) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError("configs line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline void write_configs_jsonl(std::ostream& out, std::span<const FirewallConfig> configs) {
    for (const auto& c : configs) {
        nlohmann::json j{{"vm_id", c.endpoint.vm_id},
                         {"endpoint_port", c.endpoint.port},
                         {"default", c.is_default}};
        auto allow = nlohmann::json::array();
        if (!c.is_default)
            for (const auto& range : c.allowed_ranges) allow.push_back(range.to_string());
        j["allow"] = std::move(allow);
        out << j.dump() << '\n';
    }
}

inline bool config_allows(const FirewallConfig& config, uint32_t ip) {
    for (const auto& range : config.allowed_ranges)
        if (range.contains(ip)) return true;
    return false;
}

/// One labeled pair per distinct (configured endpoint, remote IP) seen in
/// flows; allow iff the IP lies in any allowed range. Output is sorted and
/// independent of flow order.
inline std::vector<LabeledPair> label_pairs(std::span<const FlowRecord> flows,
                                            std::span<const FirewallConfig> configs) {
    std::map<EndpointId, const FirewallConfig*> by_endpoint;
    for (const auto& c : configs) {
        auto [it, inserted] = by_endpoint.emplace(c.endpoint, &c);
        if (!inserted)
            throw InputError("duplicate firewall config for endpoint " + c.endpoint.to_string());
    }
    std::set<std::pair<EndpointId, uint32_t>> seen;
    for (const auto& f : flows) {
        auto it = by_endpoint.find(f.endpoint());
        if (it == by_endpoint.end() || it->second->is_default) continue;
        seen.emplace(f.endpoint(), f.remote_ip);
    }
    std::vector<LabeledPair> out;
    out.reserve(seen.size());
    for (const auto& [endpoint, ip] : seen) {
        const FirewallConfig* config = by_endpoint.at(endpoint);
        out.push_back({endpoint, ip, config_allows(*config, ip) ? Label::allow : Label::deny});
    }
    return out;
}

struct EndpointStats {
    size_t labeled_endpoints = 0;
    size_t total_endpoints = 0;
};

/// Share of endpoints carrying a non-default expert config, among all
/// endpoints observed in the flows.
inline EndpointStats labeled_endpoint_stats(std::span<const FlowRecord> flows,
                                            std::span<const FirewallConfig> configs) {
    std::set<EndpointId> endpoints;
    for (const auto& f : flows) endpoints.insert(f.endpoint());
    std::set<EndpointId> labeled;
    for (const auto& c : configs)
        if (!c.is_default && endpoints.count(c.endpoint)) labeled.insert(c.endpoint);
    return {labeled.size(), endpoints.size()};
}

}  // namespace fwrec
