#ifndef BCA_ADDR_HPP
#define BCA_ADDR_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "bca/bytes.hpp"

namespace bca {

/// 3-bit security parameter, range 0..7.
class SecParam {
public:
    explicit SecParam(int value) : value_(value) {
        if (value < 0 || value > 7) throw std::out_of_range("sec must be in [0,7]");
    }

    int value() const { return value_; }

    auto operator<=>(const SecParam&) const = default;

private:
    int value_;
};

/// Rightmost 64 bits of an IPv6 address. Bit 0 is the most significant bit
/// of the leftmost byte; bits 0-2 carry sec, bits 6-7 (u/g) are forced to
/// zero on construction through build_iid.
struct InterfaceIdentifier {
    std::array<uint8_t, 8> bits{};

    auto operator<=>(const InterfaceIdentifier&) const = default;
};

inline InterfaceIdentifier build_iid(std::span<const uint8_t, 8> hash64, SecParam sec) {
    InterfaceIdentifier iid;
    std::copy(hash64.begin(), hash64.end(), iid.bits.begin());
    // Copy first, then write sec into bits 0-2, then clear u/g (bits 6-7).
    iid.bits[0] = static_cast<uint8_t>((iid.bits[0] & 0x1c) | (sec.value() << 5));
    return iid;
}

inline SecParam extract_sec(const InterfaceIdentifier& iid) {
    return SecParam(iid.bits[0] >> 5);
}

/// Equality over all bits except 0-2 (sec) and 6-7 (u/g).
inline bool iid_equal_ignoring_reserved(const InterfaceIdentifier& a, const InterfaceIdentifier& b) {
    if ((a.bits[0] & 0x1c) != (b.bits[0] & 0x1c)) return false;
    for (size_t i = 1; i < 8; ++i)
        if (a.bits[i] != b.bits[i]) return false;
    return true;
}

inline bool iid_equal_ignoring_reserved(const InterfaceIdentifier& a,
                                        std::span<const uint8_t, 8> b) {
    InterfaceIdentifier ib;
    std::copy(b.begin(), b.end(), ib.bits.begin());
    return iid_equal_ignoring_reserved(a, ib);
}

struct Ipv6Address {
    std::array<uint8_t, 8> prefix{};
    InterfaceIdentifier iid;

    auto operator<=>(const Ipv6Address&) const = default;

    std::array<uint8_t, 16> octets() const {
        std::array<uint8_t, 16> out{};
        std::copy(prefix.begin(), prefix.end(), out.begin());
        std::copy(iid.bits.begin(), iid.bits.end(), out.begin() + 8);
        return out;
    }

    static Ipv6Address from_octets(std::span<const uint8_t, 16> o) {
        Ipv6Address a;
        std::copy(o.begin(), o.begin() + 8, a.prefix.begin());
        std::copy(o.begin() + 8, o.end(), a.iid.bits.begin());
        return a;
    }
};

/// Canonical RFC 5952 text form: lowercase hex, longest zero run compressed.
inline std::string format_ipv6(const Ipv6Address& addr) {
    auto o = addr.octets();
    std::array<uint16_t, 8> groups;
    for (int i = 0; i < 8; ++i)
        groups[i] = static_cast<uint16_t>((o[2 * i] << 8) | o[2 * i + 1]);

    // Longest run of zero groups, length >= 2, first on tie.
    int best_start = -1, best_len = 0;
    for (int i = 0; i < 8;) {
        if (groups[i] != 0) { ++i; continue; }
        int j = i;
        while (j < 8 && groups[j] == 0) ++j;
        if (j - i > best_len) { best_start = i; best_len = j - i; }
        i = j;
    }
    if (best_len < 2) best_start = -1;

    std::string s;
    char buf[8];
    for (int i = 0; i < 8;) {
        if (i == best_start) {
            s += "::";
            i += best_len;
            continue;
        }
        if (!s.empty() && s.back() != ':') s += ':';
        std::snprintf(buf, sizeof(buf), "%x", groups[i]);
        s += buf;
        ++i;
    }
    return s;
}

inline std::optional<Ipv6Address> parse_ipv6(const std::string& text) {
    std::array<uint16_t, 8> groups{};
    std::vector<uint16_t> head, tail;
    bool seen_gap = false;

    size_t pos = 0;
    auto parse_group = [&](size_t start, size_t end) -> std::optional<uint16_t> {
        if (end == start || end - start > 4) return std::nullopt;
        uint32_t v = 0;
        for (size_t k = start; k < end; ++k) {
            char c = text[k];
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else return std::nullopt;
            v = (v << 4) | static_cast<uint32_t>(d);
        }
        return static_cast<uint16_t>(v);
    };

    if (text.empty()) return std::nullopt;
    if (text.rfind("::", 0) == 0) { seen_gap = true; pos = 2; }

    while (pos < text.size()) {
        size_t next = text.find(':', pos);
        size_t end = (next == std::string::npos) ? text.size() : next;
        auto g = parse_group(pos, end);
        if (!g) return std::nullopt;
        (seen_gap ? tail : head).push_back(*g);
        if (next == std::string::npos) { pos = text.size(); break; }
        pos = next + 1;
        if (pos < text.size() && text[pos] == ':') {
            if (seen_gap) return std::nullopt;
            seen_gap = true;
            ++pos;
        } else if (pos == text.size()) {
            return std::nullopt; // trailing single colon
        }
    }

    size_t total = head.size() + tail.size();
    if (seen_gap) {
        if (total > 7) return std::nullopt;
    } else if (total != 8) {
        return std::nullopt;
    }
    for (size_t i = 0; i < head.size(); ++i) groups[i] = head[i];
    for (size_t i = 0; i < tail.size(); ++i) groups[8 - tail.size() + i] = tail[i];

    std::array<uint8_t, 16> o{};
    for (int i = 0; i < 8; ++i) {
        o[2 * i] = static_cast<uint8_t>(groups[i] >> 8);
        o[2 * i + 1] = static_cast<uint8_t>(groups[i] & 0xff);
    }
    return Ipv6Address::from_octets(o);
}

} // namespace bca

#endif // BCA_ADDR_HPP
