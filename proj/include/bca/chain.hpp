#ifndef BCA_CHAIN_HPP
#define BCA_CHAIN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bca/addr.hpp"
#include "bca/bytes.hpp"
#include "bca/hash.hpp"
#include "bca/merkle.hpp"

namespace bca {

inline constexpr uint64_t kMMax = uint64_t{1} << 28;
inline constexpr size_t kTxProofMaxHeight = 28;

struct BlockHeader {
    uint32_t version = 1;
    Digest256 prev_block_hash;
    Digest256 merkle_root;
    uint32_t timestamp = 0;
    uint32_t bits = 0;
    uint32_t nonce = 0;

    auto operator<=>(const BlockHeader&) const = default;
};

inline constexpr size_t kHeaderLen = 80;

inline Bytes serialize_header(const BlockHeader& h) {
    Bytes out;
    out.reserve(kHeaderLen);
    put_u32le(out, h.version);
    append(out, h.prev_block_hash.bytes);
    append(out, h.merkle_root.bytes);
    put_u32le(out, h.timestamp);
    put_u32le(out, h.bits);
    put_u32le(out, h.nonce);
    return out;
}

inline std::optional<BlockHeader> parse_header(std::span<const uint8_t> in) {
    if (in.size() != kHeaderLen) return std::nullopt;
    BlockHeader h;
    h.version = get_u32le(in.subspan(0, 4));
    std::copy(in.begin() + 4, in.begin() + 36, h.prev_block_hash.bytes.begin());
    std::copy(in.begin() + 36, in.begin() + 68, h.merkle_root.bytes.begin());
    h.timestamp = get_u32le(in.subspan(68, 4));
    h.bits = get_u32le(in.subspan(72, 4));
    h.nonce = get_u32le(in.subspan(76, 4));
    return h;
}

inline Digest256 header_hash(const BlockHeader& h) { return sha256d(serialize_header(h)); }

inline int leading_zero_bits(const Digest256& d) {
    int count = 0;
    for (uint8_t b : d.bytes) {
        if (b == 0) { count += 8; continue; }
        for (int bit = 7; bit >= 0; --bit) {
            if (b & (1 << bit)) return count;
            ++count;
        }
    }
    return count;
}

// --- compact difficulty encoding (Bitcoin nBits) ---

/// Big-endian 256-bit target decoded from a compact bits value.
inline std::array<uint8_t, 32> target_from_compact(uint32_t bits) {
    std::array<uint8_t, 32> target{};
    uint32_t exponent = bits >> 24;
    uint32_t mantissa = bits & 0x007fffff;
    if (bits & 0x00800000) return target; // negative target, treat as zero
    for (int i = 0; i < 3; ++i) {
        int pos = static_cast<int>(exponent) - 1 - i; // power-of-256 position
        uint8_t byte = static_cast<uint8_t>(mantissa >> (8 * (2 - i)));
        if (pos >= 0 && pos < 32) target[31 - pos] = byte;
    }
    return target;
}

inline uint32_t compact_from_target(const std::array<uint8_t, 32>& target) {
    size_t first = 0;
    while (first < 32 && target[first] == 0) ++first;
    if (first == 32) return 0;
    uint32_t exponent = static_cast<uint32_t>(32 - first);
    uint32_t mantissa = 0;
    for (size_t i = 0; i < 3; ++i) {
        mantissa <<= 8;
        if (first + i < 32) mantissa |= target[first + i];
    }
    if (mantissa & 0x00800000) {
        mantissa >>= 8;
        exponent += 1;
    }
    return (exponent << 24) | mantissa;
}

/// Target with the given number of leading zero bits: 2^(256-z) - 1.
inline std::array<uint8_t, 32> target_for_zero_bits(int zero_bits) {
    std::array<uint8_t, 32> target{};
    if (zero_bits >= 256) return target;
    int z = zero_bits;
    for (int i = 0; i < 32; ++i) {
        if (z >= 8) { z -= 8; continue; }
        target[i] = static_cast<uint8_t>(0xff >> z);
        z = 0;
    }
    return target;
}

inline bool hash_meets_target(const Digest256& hash, const std::array<uint8_t, 32>& target) {
    for (int i = 0; i < 32; ++i) {
        if (hash.bytes[i] < target[i]) return true;
        if (hash.bytes[i] > target[i]) return false;
    }
    return true;
}

/// difficulty = difficulty-1 target / current target, as in Bitcoin
/// (difficulty-1 is bits 0x1d00ffff).
inline double difficulty_from_compact(uint32_t bits) {
    uint32_t exponent = bits >> 24;
    uint32_t mantissa = bits & 0x007fffff;
    if (mantissa == 0) return 0.0;
    double target = static_cast<double>(mantissa) *
                    std::pow(256.0, static_cast<double>(exponent) - 3.0);
    double diff1 = 65535.0 * std::pow(256.0, static_cast<double>(0x1d) - 3.0);
    return diff1 / target;
}

// --- proof-of-work profiles ---

enum class ProfileId : uint8_t { Mainnet = 1, Toy = 2 };

/// Zero-bit schedule: a header at level sec must hash to at least
/// base_zero_bits + step_zero_bits * sec leading zero bits.
struct PowProfile {
    ProfileId id;
    int base_zero_bits;
    int step_zero_bits;

    int required_zero_bits(SecParam sec) const {
        return base_zero_bits + step_zero_bits * sec.value();
    }

    static PowProfile mainnet() { return {ProfileId::Mainnet, 32, 16}; }
    /// Test-only reduced schedule; artifacts written under it are marked
    /// non-interoperable via the profile id in their file header.
    static PowProfile toy() { return {ProfileId::Toy, 8, 4}; }

    static PowProfile from_id(uint8_t id) {
        switch (id) {
            case 1: return mainnet();
            case 2: return toy();
        }
        throw std::runtime_error("unknown PoW profile id");
    }

    static PowProfile from_name(const std::string& name) {
        if (name == "mainnet") return mainnet();
        if (name == "toy") return toy();
        throw std::invalid_argument("profile must be 'mainnet' or 'toy'");
    }
};

inline bool pow_check(const BlockHeader& h, SecParam sec, const PowProfile& profile) {
    return leading_zero_bits(header_hash(h)) >= profile.required_zero_bits(sec);
}

inline SecParam sec_from_difficulty(double difficulty) {
    if (difficulty < 1.0) throw std::invalid_argument("difficulty must be at least 1");
    int sec = static_cast<int>(std::floor(std::log2(difficulty) / 16.0));
    return SecParam(std::min(sec, 7));
}

/// The sec level a verifier attributes to a mined header. Under the mainnet
/// profile it comes from the difficulty encoded in bits; the toy profile has
/// no meaningful difficulty, so the zero-bit schedule is read off the hash.
inline SecParam sec_from_header(const BlockHeader& h, const PowProfile& profile) {
    if (profile.id == ProfileId::Mainnet) {
        return sec_from_difficulty(difficulty_from_compact(h.bits));
    }
    int lzb = leading_zero_bits(header_hash(h));
    int sec = (lzb - profile.base_zero_bits) / profile.step_zero_bits;
    return SecParam(std::clamp(sec, 0, 7));
}

// --- transactions ---

inline constexpr std::array<uint8_t, 4> kTxPayloadTag = {'B', 'C', 'A', '1'};

/// Minimal key-registration transaction: a carrier for the public-key hash
/// and the modifier-tree root, padded to any desired total size.
struct Transaction {
    uint16_t version = 1;
    Digest256 pubkey_hash;
    Digest256 modifier_root;
    Bytes padding;

    auto operator<=>(const Transaction&) const = default;

    Bytes serialize() const {
        if (padding.size() > 0xffff) throw std::length_error("transaction padding too long");
        Bytes out;
        put_u16le(out, version);
        append(out, kTxPayloadTag);
        append(out, pubkey_hash.bytes);
        append(out, modifier_root.bytes);
        put_u16le(out, static_cast<uint16_t>(padding.size()));
        append(out, padding);
        return out;
    }

    static std::optional<Transaction> parse(std::span<const uint8_t> in, size_t* consumed = nullptr) {
        if (in.size() < 72) return std::nullopt;
        Transaction tx;
        tx.version = get_u16le(in.subspan(0, 2));
        if (!std::equal(kTxPayloadTag.begin(), kTxPayloadTag.end(), in.begin() + 2))
            return std::nullopt;
        std::copy(in.begin() + 6, in.begin() + 38, tx.pubkey_hash.bytes.begin());
        std::copy(in.begin() + 38, in.begin() + 70, tx.modifier_root.bytes.begin());
        size_t pad_len = get_u16le(in.subspan(70, 2));
        if (in.size() < 72 + pad_len) return std::nullopt;
        tx.padding.assign(in.begin() + 72, in.begin() + 72 + pad_len);
        if (consumed) *consumed = 72 + pad_len;
        return tx;
    }

    Digest256 txid() const { return sha256d(serialize()); }
};

// --- mining ---

struct MineResult {
    BlockHeader header;
    uint64_t attempts = 0;
};

inline Digest256 tx_merkle_root(const std::vector<Transaction>& txs) {
    std::vector<Bytes> leaves;
    leaves.reserve(txs.size());
    for (const Transaction& tx : txs) leaves.push_back(tx.serialize());
    return MerkleTree::build(leaves).root();
}

/// Scans nonces from nonce_start, bumping the timestamp on nonce wraparound
/// (up to 2^16 bumps). Throws if the search space is exhausted.
inline MineResult mine_block(const Digest256& prev, const std::vector<Transaction>& txs,
                             SecParam sec, const PowProfile& profile, uint32_t nonce_start = 0,
                             uint32_t timestamp = 1700000000) {
    if (txs.empty()) throw std::invalid_argument("a block needs at least one transaction");
    if (txs.size() > kMMax) throw std::invalid_argument("transaction count exceeds M_max");
    int zero_bits = profile.required_zero_bits(sec);

    BlockHeader h;
    h.prev_block_hash = prev;
    h.merkle_root = tx_merkle_root(txs);
    h.timestamp = timestamp;
    h.bits = compact_from_target(target_for_zero_bits(zero_bits));
    // Mine against the target as bits actually encodes it; compact encoding
    // truncates to three mantissa bytes, so this is marginally stricter than
    // the zero-bit threshold and keeps the header self-consistent.
    std::array<uint8_t, 32> target = target_from_compact(h.bits);

    MineResult result;
    for (uint32_t bump = 0; bump < (1u << 16); ++bump) {
        h.timestamp = timestamp + bump;
        uint32_t nonce = nonce_start;
        do {
            h.nonce = nonce;
            ++result.attempts;
            if (hash_meets_target(header_hash(h), target)) {
                result.header = h;
                return result;
            }
            ++nonce;
        } while (nonce != nonce_start);
    }
    throw std::runtime_error("mining search space exhausted");
}

// --- chain store ---

struct TxLocation {
    uint64_t height = 0;
    uint64_t leaf_index = 0;
};

struct TxProofBundle {
    Transaction tx;
    MerkleProof proof;
    BlockHeader header;
};

/// Append-only simulated chain. Blocks persist to a single file when a path
/// is given; the index is rebuilt on open. Single writer, any readers.
class ChainStore {
public:
    /// File layout: magic "BCACHAIN", 1-byte profile id, then per block a
    /// 4-byte tx count, the 80-byte header, and length-prefixed transactions.
    static constexpr std::array<uint8_t, 8> kMagic = {'B', 'C', 'A', 'C', 'H', 'A', 'I', 'N'};

    static ChainStore create(const std::string& path, const PowProfile& profile) {
        ChainStore store(path, profile);
        if (!path.empty()) store.write_preamble();
        return store;
    }

    static ChainStore open(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open chain store: " + path);
        Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        if (data.size() < 9 || !std::equal(kMagic.begin(), kMagic.end(), data.begin()))
            throw std::runtime_error("not a chain store file: " + path);
        ChainStore store(path, PowProfile::from_id(data[8]));
        size_t pos = 9;
        while (pos < data.size()) {
            std::span<const uint8_t> rest(data.data() + pos, data.size() - pos);
            if (rest.size() < 4 + kHeaderLen) throw std::runtime_error("truncated chain store");
            uint32_t tx_count = get_u32le(rest.subspan(0, 4));
            auto header = parse_header(rest.subspan(4, kHeaderLen));
            if (!header) throw std::runtime_error("bad header in chain store");
            pos += 4 + kHeaderLen;
            Block block;
            block.header = *header;
            for (uint32_t i = 0; i < tx_count; ++i) {
                std::span<const uint8_t> txrest(data.data() + pos, data.size() - pos);
                if (txrest.size() < 4) throw std::runtime_error("truncated chain store");
                uint32_t tx_len = get_u32le(txrest.subspan(0, 4));
                if (txrest.size() < 4 + tx_len) throw std::runtime_error("truncated chain store");
                auto tx = Transaction::parse(txrest.subspan(4, tx_len));
                if (!tx) throw std::runtime_error("bad transaction in chain store");
                block.txs.push_back(*tx);
                pos += 4 + tx_len;
            }
            store.index_block(block);
            store.blocks_.push_back(std::move(block));
        }
        return store;
    }

    const PowProfile& profile() const { return profile_; }
    uint64_t block_count() const { return blocks_.size(); }

    Digest256 tip_hash() const {
        return blocks_.empty() ? Digest256{} : header_hash(blocks_.back().header);
    }

    /// Mines a single-step block containing tx and appends it.
    TxLocation submit_and_mine(const Transaction& tx, SecParam sec, uint32_t nonce_start = 0) {
        std::string id = tx.txid().hex();
        if (index_.count(id)) throw std::runtime_error("duplicate transaction id");
        MineResult mined = mine_block(tip_hash(), {tx}, sec, profile_, nonce_start);
        Block block;
        block.header = mined.header;
        block.txs.push_back(tx);
        TxLocation loc{blocks_.size(), 0};
        index_block(block);
        blocks_.push_back(block);
        if (!path_.empty()) append_block(block);
        return loc;
    }

    BlockHeader get_header(uint64_t height) const {
        if (height >= blocks_.size()) throw std::out_of_range("unknown block height");
        return blocks_[height].header;
    }

    std::optional<TxLocation> find_tx(const Digest256& txid) const {
        auto it = index_.find(txid.hex());
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    TxProofBundle get_tx_proof(const Digest256& txid) const {
        auto loc = find_tx(txid);
        if (!loc) throw std::runtime_error("unknown transaction id");
        const Block& block = blocks_[loc->height];
        std::vector<Bytes> leaves;
        for (const Transaction& tx : block.txs) leaves.push_back(tx.serialize());
        MerkleTree tree = MerkleTree::build(leaves);
        return {block.txs[loc->leaf_index], tree.prove(loc->leaf_index), block.header};
    }

private:
    struct Block {
        BlockHeader header;
        std::vector<Transaction> txs;
    };

    ChainStore(std::string path, PowProfile profile)
        : path_(std::move(path)), profile_(profile) {}

    void index_block(const Block& block) {
        for (size_t i = 0; i < block.txs.size(); ++i)
            index_[block.txs[i].txid().hex()] = TxLocation{blocks_.size(), i};
    }

    void write_preamble() {
        std::ofstream f(path_, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot create chain store: " + path_);
        f.write(reinterpret_cast<const char*>(kMagic.data()), kMagic.size());
        uint8_t id = static_cast<uint8_t>(profile_.id);
        f.write(reinterpret_cast<const char*>(&id), 1);
        if (!f) throw std::runtime_error("chain store write failed: " + path_);
    }

    void append_block(const Block& block) {
        std::ofstream f(path_, std::ios::binary | std::ios::app);
        if (!f) throw std::runtime_error("cannot append to chain store: " + path_);
        Bytes out;
        put_u32le(out, static_cast<uint32_t>(block.txs.size()));
        append(out, serialize_header(block.header));
        for (const Transaction& tx : block.txs) {
            Bytes ser = tx.serialize();
            put_u32le(out, static_cast<uint32_t>(ser.size()));
            append(out, ser);
        }
        f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
        if (!f) throw std::runtime_error("chain store write failed: " + path_);
    }

    std::string path_;
    PowProfile profile_;
    std::vector<Block> blocks_;
    std::map<std::string, TxLocation> index_;
};

} // namespace bca

#endif // BCA_CHAIN_HPP
