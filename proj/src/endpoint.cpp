#include "pocket/endpoint.hpp"

#include <charconv>
#include <vector>

namespace pocket {

namespace {

// Strict decimal parse: no sign, no leading zeros, whole input consumed.
std::optional<uint32_t> parse_decimal(std::string_view s, uint32_t max_value) {
    if (s.empty() || s.size() > 10) return std::nullopt;
    if (s.size() > 1 && s[0] == '0') return std::nullopt;
    uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    if (value > max_value) return std::nullopt;
    return value;
}

} // namespace

std::optional<uint32_t> parse_ipv4(const std::string& text) {
    std::vector<std::string_view> octets;
    std::string_view sv = text;
    size_t start = 0;
    for (size_t i = 0; i <= sv.size(); ++i) {
        if (i == sv.size() || sv[i] == '.') {
            octets.push_back(sv.substr(start, i - start));
            start = i + 1;
        }
    }
    if (octets.size() != 4) return std::nullopt;
    uint32_t addr = 0;
    for (auto part : octets) {
        auto octet = parse_decimal(part, 255);
        if (!octet) return std::nullopt;
        addr = (addr << 8) | *octet;
    }
    return addr;
}

std::string ipv4_to_string(uint32_t address) {
    std::string out;
    for (int shift = 24; shift >= 0; shift -= 8) {
        out += std::to_string((address >> shift) & 0xff);
        if (shift > 0) out += '.';
    }
    return out;
}

std::string Endpoint::to_string() const {
    return ipv4_to_string(address) + ":" + std::to_string(port);
}

std::optional<Endpoint> Endpoint::parse(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos) return std::nullopt;
    auto addr = parse_ipv4(text.substr(0, colon));
    if (!addr) return std::nullopt;
    auto port = parse_decimal(std::string_view(text).substr(colon + 1), 65535);
    if (!port) return std::nullopt;
    return Endpoint{*addr, static_cast<uint16_t>(*port)};
}

bool Ipv4Cidr::contains(uint32_t address) const {
    if (prefix_len <= 0) return true;
    uint32_t mask = prefix_len >= 32 ? 0xffffffffu : ~((1u << (32 - prefix_len)) - 1);
    return (address & mask) == (network & mask);
}

std::string Ipv4Cidr::to_string() const {
    return ipv4_to_string(network) + "/" + std::to_string(prefix_len);
}

std::optional<Ipv4Cidr> Ipv4Cidr::parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) return std::nullopt;
    auto addr = parse_ipv4(text.substr(0, slash));
    if (!addr) return std::nullopt;
    auto len = parse_decimal(std::string_view(text).substr(slash + 1), 32);
    if (!len) return std::nullopt;
    return Ipv4Cidr{*addr, static_cast<int>(*len)};
}

} // namespace pocket
