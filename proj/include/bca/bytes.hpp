#ifndef BCA_BYTES_HPP
#define BCA_BYTES_HPP

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bca {

using Bytes = std::vector<uint8_t>;

inline void append(Bytes& out, std::span<const uint8_t> data) {
    out.insert(out.end(), data.begin(), data.end());
}

inline void put_u16le(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32le(Bytes& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline uint16_t get_u16le(std::span<const uint8_t> in) {
    return static_cast<uint16_t>(in[0] | (in[1] << 8));
}

inline uint32_t get_u32le(std::span<const uint8_t> in) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[i]) << (8 * i);
    return v;
}

inline std::string to_hex(std::span<const uint8_t> data) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    s.reserve(data.size() * 2);
    for (uint8_t b : data) {
        s.push_back(kDigits[b >> 4]);
        s.push_back(kDigits[b & 0x0f]);
    }
    return s;
}

inline Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("invalid hex digit");
    };
    Bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2)
        out.push_back(static_cast<uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
    return out;
}

/// Deterministic randomness source. Seeded construction gives reproducible
/// streams; default construction seeds from the platform entropy source.
class Rng {
public:
    Rng() : engine_(std::random_device{}()) {}
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    void fill(std::span<uint8_t> out) {
        size_t i = 0;
        while (i < out.size()) {
            uint64_t v = engine_();
            for (int j = 0; j < 8 && i < out.size(); ++j, ++i) {
                out[i] = static_cast<uint8_t>(v >> (8 * j));
            }
        }
    }

    Bytes bytes(size_t n) {
        Bytes out(n);
        fill(out);
        return out;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace bca

#endif // BCA_BYTES_HPP
