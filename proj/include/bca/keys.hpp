#ifndef BCA_KEYS_HPP
#define BCA_KEYS_HPP

#include <array>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/obj_mac.h>

#include "bca/bytes.hpp"
#include "bca/hash.hpp"

namespace bca {

// DER SubjectPublicKeyInfo prefix for an uncompressed secp256k1 point:
// SEQUENCE { SEQUENCE { OID id-ecPublicKey, OID secp256k1 }, BIT STRING }
// followed by 0x04 || X(32) || Y(32). Total encoding is 88 bytes.
inline constexpr std::array<uint8_t, 23> kSpkiPrefix = {
    0x30, 0x56, 0x30, 0x10, 0x06, 0x07, 0x2a, 0x86, 0x48, 0xce, 0x3d, 0x02,
    0x01, 0x06, 0x05, 0x2b, 0x81, 0x04, 0x00, 0x0a, 0x03, 0x42, 0x00};

inline constexpr size_t kEncodedPublicKeyLen = 88;

namespace detail {

struct BnDeleter { void operator()(BIGNUM* p) const { BN_free(p); } };
struct GroupDeleter { void operator()(EC_GROUP* p) const { EC_GROUP_free(p); } };
struct PointDeleter { void operator()(EC_POINT* p) const { EC_POINT_free(p); } };
struct CtxDeleter { void operator()(BN_CTX* p) const { BN_CTX_free(p); } };

using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using GroupPtr = std::unique_ptr<EC_GROUP, GroupDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;
using CtxPtr = std::unique_ptr<BN_CTX, CtxDeleter>;

inline const EC_GROUP* secp256k1_group() {
    static GroupPtr group(EC_GROUP_new_by_curve_name(NID_secp256k1));
    if (!group) throw std::runtime_error("secp256k1 group unavailable");
    return group.get();
}

} // namespace detail

/// Canonical public-key encoding: DER SubjectPublicKeyInfo carrying the
/// uncompressed curve point, always 88 bytes.
struct EncodedPublicKey {
    Bytes der;

    auto operator<=>(const EncodedPublicKey&) const = default;

    /// Checks length, SPKI prefix, and that the embedded point lies on the
    /// curve.
    static std::optional<EncodedPublicKey> decode(const Bytes& der) {
        if (der.size() != kEncodedPublicKeyLen) return std::nullopt;
        if (!std::equal(kSpkiPrefix.begin(), kSpkiPrefix.end(), der.begin())) return std::nullopt;
        const EC_GROUP* group = detail::secp256k1_group();
        detail::CtxPtr ctx(BN_CTX_new());
        detail::PointPtr point(EC_POINT_new(group));
        if (EC_POINT_oct2point(group, point.get(), der.data() + kSpkiPrefix.size(),
                               kEncodedPublicKeyLen - kSpkiPrefix.size(), ctx.get()) != 1) {
            return std::nullopt;
        }
        if (EC_POINT_is_on_curve(group, point.get(), ctx.get()) != 1) return std::nullopt;
        return EncodedPublicKey{der};
    }
};

struct KeyPair {
    std::array<uint8_t, 32> secret{};
    EncodedPublicKey public_key;
};

/// Derives the key pair for a given secret scalar. Throws if the scalar is
/// zero or not below the curve order.
inline KeyPair keypair_from_secret(std::span<const uint8_t, 32> secret) {
    const EC_GROUP* group = detail::secp256k1_group();
    detail::CtxPtr ctx(BN_CTX_new());
    detail::BnPtr d(BN_bin2bn(secret.data(), 32, nullptr));
    if (!d || BN_is_zero(d.get())) throw std::invalid_argument("secret scalar must be nonzero");
    const BIGNUM* order = EC_GROUP_get0_order(group);
    if (BN_cmp(d.get(), order) >= 0)
        throw std::invalid_argument("secret scalar must be below the curve order");

    detail::PointPtr pub(EC_POINT_new(group));
    if (EC_POINT_mul(group, pub.get(), d.get(), nullptr, nullptr, ctx.get()) != 1)
        throw std::runtime_error("point multiplication failed");

    Bytes der(kSpkiPrefix.begin(), kSpkiPrefix.end());
    der.resize(kEncodedPublicKeyLen);
    size_t written =
        EC_POINT_point2oct(group, pub.get(), POINT_CONVERSION_UNCOMPRESSED,
                           der.data() + kSpkiPrefix.size(), 65, ctx.get());
    if (written != 65) throw std::runtime_error("point serialization failed");

    KeyPair kp;
    std::copy(secret.begin(), secret.end(), kp.secret.begin());
    kp.public_key = EncodedPublicKey{std::move(der)};
    return kp;
}

/// Seeded generation uses the seed directly as the secret scalar; unseeded
/// generation draws a fresh scalar from the platform entropy source.
inline KeyPair generate_keypair(std::optional<std::array<uint8_t, 32>> seed = std::nullopt) {
    if (seed) return keypair_from_secret(*seed);
    Rng rng;
    while (true) {
        std::array<uint8_t, 32> secret{};
        rng.fill(secret);
        try {
            return keypair_from_secret(secret);
        } catch (const std::invalid_argument&) {
            // out-of-range draw, retry
        }
    }
}

inline KeyPair generate_keypair(uint64_t seed) {
    std::array<uint8_t, 32> secret{};
    for (int i = 0; i < 8; ++i) secret[31 - i] = static_cast<uint8_t>(seed >> (8 * i));
    return keypair_from_secret(secret);
}

inline Digest256 pubkey_hash(const EncodedPublicKey& key) { return sha256(key.der); }

/// Key file format: secret hex on line one, public DER hex on line two.
inline void save_keypair(const KeyPair& kp, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open key file for writing: " + path);
    f << to_hex(kp.secret) << "\n" << to_hex(kp.public_key.der) << "\n";
}

inline KeyPair load_keypair(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open key file: " + path);
    std::string secret_hex, pub_hex;
    if (!std::getline(f, secret_hex) || !std::getline(f, pub_hex))
        throw std::runtime_error("malformed key file: " + path);
    Bytes secret = from_hex(secret_hex);
    if (secret.size() != 32) throw std::runtime_error("key file secret must be 32 bytes");
    std::array<uint8_t, 32> s{};
    std::copy(secret.begin(), secret.end(), s.begin());
    KeyPair kp = keypair_from_secret(s);
    if (to_hex(kp.public_key.der) != pub_hex)
        throw std::runtime_error("key file public key does not match secret");
    return kp;
}

} // namespace bca

#endif // BCA_KEYS_HPP
