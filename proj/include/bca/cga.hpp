#ifndef BCA_CGA_HPP
#define BCA_CGA_HPP

#include <array>
#include <atomic>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bca/addr.hpp"
#include "bca/bytes.hpp"
#include "bca/hash.hpp"
#include "bca/keys.hpp"

namespace bca {

/// Duplicate Address Detection hook. Returns true when the tentative
/// address collides with an existing one on the link.
using CollisionOracle = std::function<bool(const Ipv6Address&)>;

inline CollisionOracle no_collisions() {
    return [](const Ipv6Address&) { return false; };
}

struct CgaParameters {
    std::array<uint8_t, 16> modifier{};
    std::array<uint8_t, 8> subnet_prefix{};
    uint8_t collision_count = 0;
    EncodedPublicKey public_key;
    Bytes extension;

    auto operator<=>(const CgaParameters&) const = default;

    /// File format: modifier(16), prefix(8), collision_count(1),
    /// 2-byte key length, key DER, 2-byte extension length, extension.
    Bytes serialize() const {
        Bytes out;
        append(out, modifier);
        append(out, subnet_prefix);
        out.push_back(collision_count);
        put_u16le(out, static_cast<uint16_t>(public_key.der.size()));
        append(out, public_key.der);
        put_u16le(out, static_cast<uint16_t>(extension.size()));
        append(out, extension);
        return out;
    }

    static std::optional<CgaParameters> parse(std::span<const uint8_t> in) {
        if (in.size() < 16 + 8 + 1 + 2) return std::nullopt;
        CgaParameters p;
        std::copy(in.begin(), in.begin() + 16, p.modifier.begin());
        std::copy(in.begin() + 16, in.begin() + 24, p.subnet_prefix.begin());
        p.collision_count = in[24];
        size_t pos = 25;
        uint16_t key_len = get_u16le(in.subspan(pos, 2));
        pos += 2;
        if (in.size() < pos + key_len + 2) return std::nullopt;
        auto key = EncodedPublicKey::decode(Bytes(in.begin() + pos, in.begin() + pos + key_len));
        if (!key) return std::nullopt;
        p.public_key = *key;
        pos += key_len;
        uint16_t ext_len = get_u16le(in.subspan(pos, 2));
        pos += 2;
        if (in.size() != pos + ext_len) return std::nullopt;
        p.extension.assign(in.begin() + pos, in.begin() + pos + ext_len);
        return p;
    }
};

inline Bytes cga_hash1_preimage(const CgaParameters& p) {
    Bytes input;
    append(input, p.modifier);
    append(input, p.subnet_prefix);
    input.push_back(p.collision_count);
    append(input, p.public_key.der);
    append(input, p.extension);
    return input;
}

/// Leftmost 64 bits of the hash over the full parameter structure.
inline std::array<uint8_t, 8> cga_hash1(const CgaParameters& p) {
    Digest256 d = sha256(cga_hash1_preimage(p));
    std::array<uint8_t, 8> out{};
    std::copy(d.bytes.begin(), d.bytes.begin() + 8, out.begin());
    return out;
}

/// Leftmost 112 bits of the hash with prefix and collision count zeroed.
inline std::array<uint8_t, 14> cga_hash2(const CgaParameters& p) {
    Bytes input;
    append(input, p.modifier);
    input.insert(input.end(), 8, 0); // subnet prefix zeroed
    input.push_back(0);              // collision count zeroed
    append(input, p.public_key.der);
    append(input, p.extension);
    Digest256 d = sha256(input);
    std::array<uint8_t, 14> out{};
    std::copy(d.bytes.begin(), d.bytes.begin() + 14, out.begin());
    return out;
}

inline bool leading_bits_zero(std::span<const uint8_t> data, int bits) {
    for (int i = 0; i < bits; i += 8) {
        int take = std::min(8, bits - i);
        uint8_t mask = static_cast<uint8_t>(0xff << (8 - take));
        if (data[i / 8] & mask) return false;
    }
    return true;
}

inline bool cga_hash2_condition(const CgaParameters& p, SecParam sec) {
    if (sec.value() == 0) return true;
    return leading_bits_zero(cga_hash2(p), 16 * sec.value());
}

inline Ipv6Address cga_address(const CgaParameters& p, SecParam sec) {
    Ipv6Address addr;
    addr.prefix = p.subnet_prefix;
    addr.iid = build_iid(cga_hash1(p), sec);
    return addr;
}

inline void increment_modifier(std::array<uint8_t, 16>& modifier) {
    for (int i = 15; i >= 0; --i) {
        if (++modifier[i] != 0) break;
    }
}

struct CgaGenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CgaGenerated {
    Ipv6Address address;
    CgaParameters params;
    uint64_t hash2_evaluations = 0; // modifier-search puzzle cost
};

/// Modifier search from a random counter start, then the DAD retry loop.
/// With threads > 1 the search runs over independent random starting points
/// and the first satisfying modifier wins.
inline CgaGenerated generate_cga(const EncodedPublicKey& key, std::span<const uint8_t, 8> prefix,
                                 SecParam sec, const CollisionOracle& dad, Rng& rng,
                                 unsigned threads = 1) {
    CgaParameters params;
    params.public_key = key;
    std::copy(prefix.begin(), prefix.end(), params.subnet_prefix.begin());
    rng.fill(params.modifier);

    uint64_t evals = 0;
    if (sec.value() > 0) {
        if (threads <= 1) {
            while (true) {
                ++evals;
                if (cga_hash2_condition(params, sec)) break;
                increment_modifier(params.modifier);
            }
        } else {
            std::atomic<bool> found{false};
            std::atomic<uint64_t> total_evals{0};
            std::array<uint8_t, 16> winner{};
            std::mutex winner_mutex;
            std::vector<std::array<uint8_t, 16>> starts(threads);
            for (auto& s : starts) rng.fill(s);
            std::vector<std::thread> workers;
            for (unsigned w = 0; w < threads; ++w) {
                workers.emplace_back([&, w] {
                    CgaParameters local = params;
                    local.modifier = starts[w];
                    uint64_t local_evals = 0;
                    while (!found.load(std::memory_order_relaxed)) {
                        ++local_evals;
                        if (cga_hash2_condition(local, sec)) {
                            std::lock_guard lock(winner_mutex);
                            if (!found.exchange(true)) winner = local.modifier;
                            break;
                        }
                        increment_modifier(local.modifier);
                    }
                    total_evals.fetch_add(local_evals);
                });
            }
            for (auto& t : workers) t.join();
            params.modifier = winner;
            evals = total_evals.load();
        }
    }

    for (uint8_t cc = 0; cc <= 2; ++cc) {
        params.collision_count = cc;
        Ipv6Address addr = cga_address(params, sec);
        if (!dad(addr)) return {addr, params, evals};
    }
    throw CgaGenerationError("address generation failed after three collisions");
}

enum class CgaFailure { None, CollisionCount, PrefixMismatch, Hash1Mismatch, Hash2Nonzero };

struct CgaVerifyResult {
    bool ok = false;
    CgaFailure reason = CgaFailure::None;
};

inline CgaVerifyResult verify_cga(const Ipv6Address& addr, const CgaParameters& params) {
    if (params.collision_count > 2) return {false, CgaFailure::CollisionCount};
    if (params.subnet_prefix != addr.prefix) return {false, CgaFailure::PrefixMismatch};
    SecParam sec = extract_sec(addr.iid);
    if (!iid_equal_ignoring_reserved(addr.iid, std::span<const uint8_t, 8>(cga_hash1(params))))
        return {false, CgaFailure::Hash1Mismatch};
    if (!cga_hash2_condition(params, sec)) return {false, CgaFailure::Hash2Nonzero};
    return {true, CgaFailure::None};
}

inline const char* to_string(CgaFailure f) {
    switch (f) {
        case CgaFailure::None: return "None";
        case CgaFailure::CollisionCount: return "CollisionCount";
        case CgaFailure::PrefixMismatch: return "PrefixMismatch";
        case CgaFailure::Hash1Mismatch: return "Hash1Mismatch";
        case CgaFailure::Hash2Nonzero: return "Hash2Nonzero";
    }
    return "?";
}

} // namespace bca

#endif // BCA_CGA_HPP
