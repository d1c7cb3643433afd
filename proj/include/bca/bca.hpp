#ifndef BCA_BCA_HPP
#define BCA_BCA_HPP

#include <array>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bca/addr.hpp"
#include "bca/bytes.hpp"
#include "bca/chain.hpp"
#include "bca/cga.hpp"
#include "bca/hash.hpp"
#include "bca/keys.hpp"
#include "bca/merkle.hpp"

namespace bca {

inline constexpr size_t kNMax = 32;
inline constexpr size_t kModifierProofMaxHeight = 5; // log2(N_max)

/// The mainnet-profile registration transaction is 341 bytes; with the 72-byte
/// fixed layout that leaves 269 bytes of padding.
inline constexpr size_t kDefaultTxSize = 341;

using Modifier = std::array<uint8_t, 16>;

inline Bytes modifier_bytes(const Modifier& m) { return Bytes(m.begin(), m.end()); }

inline MerkleTree build_modifier_tree(const std::vector<Modifier>& modifiers) {
    std::vector<Bytes> leaves;
    leaves.reserve(modifiers.size());
    for (const Modifier& m : modifiers) leaves.push_back(modifier_bytes(m));
    return MerkleTree::build(leaves);
}

/// Everything a host stores after registering its key: the modifier set and
/// tree, the registration transaction, its inclusion proof, and the header
/// of the containing block. next_index points at the first unused modifier.
struct RegistrationBundle {
    EncodedPublicKey public_key;
    PowProfile profile = PowProfile::mainnet();
    std::vector<Modifier> modifiers;
    Transaction transaction;
    MerkleProof tx_proof;
    BlockHeader header;
    uint32_t next_index = 0;

    MerkleTree modifier_tree() const { return build_modifier_tree(modifiers); }

    /// Modifier set plus tree nodes, as stored in memory.
    size_t modifier_storage_bytes() const {
        return modifiers.size() * 16 + modifier_tree().total_node_count() * 32;
    }
};

inline RegistrationBundle register_key(const KeyPair& keypair, size_t modifier_count,
                                       ChainStore& chain, SecParam sec, Rng& rng,
                                       size_t tx_size = kDefaultTxSize) {
    if (modifier_count < 1 || modifier_count > kNMax)
        throw std::invalid_argument("modifier count must be in [1, N_max]");

    RegistrationBundle bundle;
    bundle.public_key = keypair.public_key;
    bundle.profile = chain.profile();
    bundle.modifiers.resize(modifier_count);
    for (Modifier& m : bundle.modifiers) rng.fill(m);

    bundle.transaction.pubkey_hash = pubkey_hash(keypair.public_key);
    bundle.transaction.modifier_root = build_modifier_tree(bundle.modifiers).root();
    size_t base_size = bundle.transaction.serialize().size();
    if (tx_size > base_size) bundle.transaction.padding = rng.bytes(tx_size - base_size);

    chain.submit_and_mine(bundle.transaction, sec, static_cast<uint32_t>(rng.next_u64()));
    TxProofBundle proof = chain.get_tx_proof(bundle.transaction.txid());
    if (!merkle_verify(proof.header.merkle_root, bundle.transaction.serialize(), proof.proof,
                       kTxProofMaxHeight)) {
        throw std::runtime_error("chain returned an invalid transaction proof");
    }
    bundle.tx_proof = proof.proof;
    bundle.header = proof.header;
    return bundle;
}

/// Bundle file: magic "BCABNDL1", profile id, key DER, 1-byte N, the N
/// modifiers, the transaction, the header, the tx proof, 4-byte next_index.
inline constexpr std::array<uint8_t, 8> kBundleMagic = {'B', 'C', 'A', 'B', 'N', 'D', 'L', '1'};

inline Bytes serialize_bundle(const RegistrationBundle& b) {
    Bytes out;
    append(out, kBundleMagic);
    out.push_back(static_cast<uint8_t>(b.profile.id));
    put_u16le(out, static_cast<uint16_t>(b.public_key.der.size()));
    append(out, b.public_key.der);
    out.push_back(static_cast<uint8_t>(b.modifiers.size()));
    for (const Modifier& m : b.modifiers) append(out, m);
    Bytes tx = b.transaction.serialize();
    put_u16le(out, static_cast<uint16_t>(tx.size()));
    append(out, tx);
    append(out, serialize_header(b.header));
    append(out, b.tx_proof.serialize());
    put_u32le(out, b.next_index);
    return out;
}

inline RegistrationBundle parse_bundle(std::span<const uint8_t> in) {
    auto fail = [](const char* why) -> RegistrationBundle {
        throw std::runtime_error(std::string("bad bundle file: ") + why);
    };
    if (in.size() < 12 || !std::equal(kBundleMagic.begin(), kBundleMagic.end(), in.begin()))
        return fail("magic");
    RegistrationBundle b;
    b.profile = PowProfile::from_id(in[8]);
    size_t pos = 9;
    uint16_t key_len = get_u16le(in.subspan(pos, 2));
    pos += 2;
    if (in.size() < pos + key_len + 1) return fail("truncated key");
    auto key = EncodedPublicKey::decode(Bytes(in.begin() + pos, in.begin() + pos + key_len));
    if (!key) return fail("public key");
    b.public_key = *key;
    pos += key_len;
    uint8_t n = in[pos++];
    if (n < 1 || n > kNMax) return fail("modifier count");
    if (in.size() < pos + n * 16 + 2) return fail("truncated modifiers");
    b.modifiers.resize(n);
    for (Modifier& m : b.modifiers) {
        std::copy(in.begin() + pos, in.begin() + pos + 16, m.begin());
        pos += 16;
    }
    uint16_t tx_len = get_u16le(in.subspan(pos, 2));
    pos += 2;
    if (in.size() < pos + tx_len + kHeaderLen) return fail("truncated transaction");
    auto tx = Transaction::parse(in.subspan(pos, tx_len));
    if (!tx) return fail("transaction");
    b.transaction = *tx;
    pos += tx_len;
    auto header = parse_header(in.subspan(pos, kHeaderLen));
    if (!header) return fail("header");
    b.header = *header;
    pos += kHeaderLen;
    size_t proof_len = 0;
    auto proof = MerkleProof::parse(in.subspan(pos), &proof_len);
    if (!proof || proof->siblings.size() > kTxProofMaxHeight) return fail("tx proof");
    b.tx_proof = *proof;
    pos += proof_len;
    if (in.size() != pos + 4) return fail("trailer");
    b.next_index = get_u32le(in.subspan(pos, 4));
    return b;
}

inline void save_bundle(const RegistrationBundle& b, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write bundle file: " + path);
    Bytes out = serialize_bundle(b);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

inline RegistrationBundle load_bundle(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open bundle file: " + path);
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_bundle(data);
}

// --- BCA parameters ---

struct BcaParameters {
    Modifier modifier{};
    EncodedPublicKey public_key;
    Transaction transaction;
    BlockHeader block_header;
    std::array<uint8_t, 8> subnet_prefix{};
    uint8_t collision_count = 0;
    MerkleProof tx_merkle_proof;
    MerkleProof modifier_merkle_proof;

    auto operator<=>(const BcaParameters&) const = default;

    /// Wire format follows the field order above; variable-length fields are
    /// 2-byte length prefixed, proofs use the Merkle proof wire format.
    Bytes serialize() const {
        Bytes out;
        append(out, modifier);
        put_u16le(out, static_cast<uint16_t>(public_key.der.size()));
        append(out, public_key.der);
        Bytes tx = transaction.serialize();
        put_u16le(out, static_cast<uint16_t>(tx.size()));
        append(out, tx);
        append(out, serialize_header(block_header));
        append(out, subnet_prefix);
        out.push_back(collision_count);
        Bytes txp = tx_merkle_proof.serialize();
        put_u16le(out, static_cast<uint16_t>(txp.size()));
        append(out, txp);
        Bytes mp = modifier_merkle_proof.serialize();
        put_u16le(out, static_cast<uint16_t>(mp.size()));
        append(out, mp);
        return out;
    }

    static std::optional<BcaParameters> parse(std::span<const uint8_t> in) {
        BcaParameters p;
        if (in.size() < 16 + 2) return std::nullopt;
        std::copy(in.begin(), in.begin() + 16, p.modifier.begin());
        size_t pos = 16;
        uint16_t key_len = get_u16le(in.subspan(pos, 2));
        pos += 2;
        if (in.size() < pos + key_len + 2) return std::nullopt;
        auto key = EncodedPublicKey::decode(Bytes(in.begin() + pos, in.begin() + pos + key_len));
        if (!key) return std::nullopt;
        p.public_key = *key;
        pos += key_len;
        uint16_t tx_len = get_u16le(in.subspan(pos, 2));
        pos += 2;
        if (in.size() < pos + tx_len + kHeaderLen + 8 + 1 + 2) return std::nullopt;
        auto tx = Transaction::parse(in.subspan(pos, tx_len));
        if (!tx) return std::nullopt;
        p.transaction = *tx;
        pos += tx_len;
        auto header = parse_header(in.subspan(pos, kHeaderLen));
        if (!header) return std::nullopt;
        p.block_header = *header;
        pos += kHeaderLen;
        std::copy(in.begin() + pos, in.begin() + pos + 8, p.subnet_prefix.begin());
        pos += 8;
        p.collision_count = in[pos++];
        uint16_t txp_len = get_u16le(in.subspan(pos, 2));
        pos += 2;
        if (in.size() < pos + txp_len + 2) return std::nullopt;
        auto txp = MerkleProof::parse(in.subspan(pos, txp_len));
        if (!txp || txp->siblings.size() > kTxProofMaxHeight) return std::nullopt;
        p.tx_merkle_proof = *txp;
        pos += txp_len;
        uint16_t mp_len = get_u16le(in.subspan(pos, 2));
        pos += 2;
        if (in.size() != pos + mp_len) return std::nullopt;
        auto mp = MerkleProof::parse(in.subspan(pos, mp_len));
        if (!mp || mp->siblings.size() > kModifierProofMaxHeight) return std::nullopt;
        p.modifier_merkle_proof = *mp;
        return p;
    }
};

inline Bytes bca_hash1_preimage(const Modifier& modifier, const BlockHeader& header,
                                std::span<const uint8_t, 8> prefix, uint8_t collision_count,
                                const Transaction& tx) {
    Bytes input;
    append(input, modifier);
    append(input, serialize_header(header));
    append(input, prefix);
    input.push_back(collision_count);
    Bytes txser = tx.serialize();
    append(input, txser);
    return input;
}

/// Leftmost 64 bits of the hash over modifier, header, prefix, collision
/// count, and transaction, in that order.
inline std::array<uint8_t, 8> bca_hash1(const Modifier& modifier, const BlockHeader& header,
                                        std::span<const uint8_t, 8> prefix, uint8_t collision_count,
                                        const Transaction& tx) {
    Digest256 d = sha256(bca_hash1_preimage(modifier, header, prefix, collision_count, tx));
    std::array<uint8_t, 8> out{};
    std::copy(d.bytes.begin(), d.bytes.begin() + 8, out.begin());
    return out;
}

struct BcaGenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BcaGenerated {
    Ipv6Address address;
    BcaParameters params;
};

/// Derives an address from the bundle's index-th modifier. One hash
/// evaluation per DAD attempt.
inline BcaGenerated generate_bca(const RegistrationBundle& bundle,
                                 std::span<const uint8_t, 8> prefix, uint32_t index,
                                 const CollisionOracle& dad) {
    if (index >= bundle.modifiers.size())
        throw BcaGenerationError("modifier index out of range (all modifiers used)");
    SecParam sec = sec_from_header(bundle.header, bundle.profile);

    BcaParameters params;
    params.modifier = bundle.modifiers[index];
    params.public_key = bundle.public_key;
    params.transaction = bundle.transaction;
    params.block_header = bundle.header;
    std::copy(prefix.begin(), prefix.end(), params.subnet_prefix.begin());
    params.tx_merkle_proof = bundle.tx_proof;
    params.modifier_merkle_proof = bundle.modifier_tree().prove(index);

    for (uint8_t cc = 0; cc <= 2; ++cc) {
        params.collision_count = cc;
        Ipv6Address addr;
        addr.prefix = params.subnet_prefix;
        addr.iid = build_iid(
            bca_hash1(params.modifier, params.block_header, prefix, cc, params.transaction), sec);
        if (!dad(addr)) return {addr, params};
    }
    throw BcaGenerationError("address generation failed after three collisions");
}

/// Consumes the bundle's next unused modifier and advances next_index.
inline BcaGenerated generate_next_bca(RegistrationBundle& bundle,
                                      std::span<const uint8_t, 8> prefix,
                                      const CollisionOracle& dad) {
    BcaGenerated out = generate_bca(bundle, prefix, bundle.next_index, dad);
    bundle.next_index += 1;
    return out;
}

enum class BcaFailure {
    None,
    Cond1CollisionCount,
    Cond2PrefixMismatch,
    Cond3PubkeyHashMismatch,
    Cond4HeaderInvalid,
    Cond5TxProofInvalid,
    Cond6ModifierProofInvalid,
    Cond7PowInsufficient,
    Cond8Hash1Mismatch,
};

struct BcaVerifyResult {
    bool ok = false;
    BcaFailure reason = BcaFailure::None;
};

/// The eight verification conditions, checked in order; pure function of its
/// arguments, no chain access.
inline BcaVerifyResult verify_bca(const Ipv6Address& addr, const BcaParameters& params,
                                  const PowProfile& profile) {
    // 1. collision count in range
    if (params.collision_count > 2) return {false, BcaFailure::Cond1CollisionCount};

    // 2. prefix equality
    if (params.subnet_prefix != addr.prefix) return {false, BcaFailure::Cond2PrefixMismatch};

    // 3. public key matches the hash registered in the transaction
    if (pubkey_hash(params.public_key) != params.transaction.pubkey_hash)
        return {false, BcaFailure::Cond3PubkeyHashMismatch};

    // 4. header format: 80-byte layout with a well-formed bits field; under
    //    the mainnet profile the hash must also meet the target bits encodes
    Bytes header_ser = serialize_header(params.block_header);
    if (header_ser.size() != kHeaderLen) return {false, BcaFailure::Cond4HeaderInvalid};
    std::array<uint8_t, 32> target = target_from_compact(params.block_header.bits);
    if (target == std::array<uint8_t, 32>{}) return {false, BcaFailure::Cond4HeaderInvalid};
    if (profile.id == ProfileId::Mainnet &&
        !hash_meets_target(header_hash(params.block_header), target))
        return {false, BcaFailure::Cond4HeaderInvalid};

    // 5. transaction inclusion proof, height capped by log2(M_max)
    if (!merkle_verify(params.block_header.merkle_root, params.transaction.serialize(),
                       params.tx_merkle_proof, kTxProofMaxHeight))
        return {false, BcaFailure::Cond5TxProofInvalid};

    // 6. modifier inclusion proof, height capped by log2(N_max)
    if (!merkle_verify(params.transaction.modifier_root, modifier_bytes(params.modifier),
                       params.modifier_merkle_proof, kModifierProofMaxHeight))
        return {false, BcaFailure::Cond6ModifierProofInvalid};

    // 7. proof of work at the sec level encoded in the address
    SecParam sec = extract_sec(addr.iid);
    if (!pow_check(params.block_header, sec, profile))
        return {false, BcaFailure::Cond7PowInsufficient};

    // 8. Hash1 matches the interface identifier, reserved bits ignored
    auto h1 = bca_hash1(params.modifier, params.block_header,
                        std::span<const uint8_t, 8>(params.subnet_prefix),
                        params.collision_count, params.transaction);
    if (!iid_equal_ignoring_reserved(addr.iid, std::span<const uint8_t, 8>(h1)))
        return {false, BcaFailure::Cond8Hash1Mismatch};

    return {true, BcaFailure::None};
}

inline const char* to_string(BcaFailure f) {
    switch (f) {
        case BcaFailure::None: return "None";
        case BcaFailure::Cond1CollisionCount: return "Cond1";
        case BcaFailure::Cond2PrefixMismatch: return "Cond2";
        case BcaFailure::Cond3PubkeyHashMismatch: return "Cond3";
        case BcaFailure::Cond4HeaderInvalid: return "Cond4";
        case BcaFailure::Cond5TxProofInvalid: return "Cond5";
        case BcaFailure::Cond6ModifierProofInvalid: return "Cond6";
        case BcaFailure::Cond7PowInsufficient: return "Cond7";
        case BcaFailure::Cond8Hash1Mismatch: return "Cond8";
    }
    return "?";
}

} // namespace bca

#endif // BCA_BCA_HPP
