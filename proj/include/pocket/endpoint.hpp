#pragma once
#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace pocket {

// IPv4 address + port. Canonical text form is "a.b.c.d:port" with no
// leading zeros; parse() accepts only the canonical form so that parsing
// and printing round-trip exactly.
struct Endpoint {
    uint32_t address = 0; // host byte order
    uint16_t port = 0;

    auto operator<=>(const Endpoint&) const = default;

    std::string to_string() const;
    static std::optional<Endpoint> parse(const std::string& text);
};

std::optional<uint32_t> parse_ipv4(const std::string& text);
std::string ipv4_to_string(uint32_t address);

// CIDR range such as "10.10.0.0/22".
struct Ipv4Cidr {
    uint32_t network = 0;
    int prefix_len = 0;

    auto operator<=>(const Ipv4Cidr&) const = default;

    bool contains(uint32_t address) const;
    std::string to_string() const;
    static std::optional<Ipv4Cidr> parse(const std::string& text);
};

} // namespace pocket
