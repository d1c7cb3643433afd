#ifndef BCA_HASH_HPP
#define BCA_HASH_HPP

#include <array>
#include <atomic>
#include <cstdint>
#include <span>
#include <stdexcept>

#include <openssl/evp.h>

#include "bca/bytes.hpp"

namespace bca {

struct Digest256 {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest256&) const = default;

    std::string hex() const { return to_hex(bytes); }
};

/// Running count of SHA-256 invocations, for cost accounting in tests and
/// benchmarks. sha256d counts as two.
inline std::atomic<uint64_t>& digest_call_counter() {
    static std::atomic<uint64_t> counter{0};
    return counter;
}

inline Digest256 sha256(std::span<const uint8_t> data) {
    digest_call_counter().fetch_add(1, std::memory_order_relaxed);
    Digest256 out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != 32) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    return out;
}

inline Digest256 sha256(const Bytes& data) { return sha256(std::span<const uint8_t>(data)); }

inline Digest256 sha256d(std::span<const uint8_t> data) {
    Digest256 first = sha256(data);
    return sha256(std::span<const uint8_t>(first.bytes));
}

inline Digest256 sha256d(const Bytes& data) { return sha256d(std::span<const uint8_t>(data)); }

} // namespace bca

#endif // BCA_HASH_HPP
