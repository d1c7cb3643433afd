#ifndef BCA_MERKLE_HPP
#define BCA_MERKLE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bca/bytes.hpp"
#include "bca/hash.hpp"

namespace bca {

enum class Side : uint8_t { Left = 0, Right = 1 };

struct ProofStep {
    Digest256 digest;
    Side side = Side::Left;

    auto operator<=>(const ProofStep&) const = default;
};

/// Sibling-hash path from a leaf to the root. Sides are carried explicitly
/// so a proof is self-contained on the wire.
struct MerkleProof {
    uint64_t leaf_index = 0; // auxiliary, not part of the wire format
    std::vector<ProofStep> siblings;

    friend bool operator==(const MerkleProof& a, const MerkleProof& b) {
        return a.siblings == b.siblings;
    }

    /// Wire format: 1 byte sibling count, then per sibling 1 side byte
    /// (0=left, 1=right) followed by 32 digest bytes.
    Bytes serialize() const {
        if (siblings.size() > 255) throw std::length_error("proof too tall for wire format");
        Bytes out;
        out.push_back(static_cast<uint8_t>(siblings.size()));
        for (const ProofStep& s : siblings) {
            out.push_back(static_cast<uint8_t>(s.side));
            append(out, s.digest.bytes);
        }
        return out;
    }

    static std::optional<MerkleProof> parse(std::span<const uint8_t> in, size_t* consumed = nullptr) {
        if (in.empty()) return std::nullopt;
        size_t count = in[0];
        if (in.size() < 1 + count * 33) return std::nullopt;
        MerkleProof p;
        size_t pos = 1;
        for (size_t i = 0; i < count; ++i) {
            uint8_t side = in[pos];
            if (side > 1) return std::nullopt;
            ProofStep step;
            step.side = static_cast<Side>(side);
            std::copy(in.begin() + pos + 1, in.begin() + pos + 33, step.digest.bytes.begin());
            p.siblings.push_back(step);
            pos += 33;
        }
        if (consumed) *consumed = pos;
        return p;
    }
};

/// Bitcoin-style binary tree: double SHA-256 for leaves and internal nodes,
/// odd-count levels duplicate the last node.
class MerkleTree {
public:
    static MerkleTree build(const std::vector<Bytes>& leaves) {
        if (leaves.empty()) throw std::invalid_argument("Merkle tree needs at least one leaf");
        std::vector<Digest256> level;
        level.reserve(leaves.size());
        for (const Bytes& leaf : leaves) level.push_back(sha256d(leaf));
        return MerkleTree(std::move(level));
    }

    static MerkleTree from_leaf_hashes(std::vector<Digest256> leaf_hashes) {
        if (leaf_hashes.empty()) throw std::invalid_argument("Merkle tree needs at least one leaf");
        return MerkleTree(std::move(leaf_hashes));
    }

    const Digest256& root() const { return levels_.back().back(); }
    size_t leaf_count() const { return levels_.front().size(); }
    size_t height() const { return levels_.size() - 1; }
    const std::vector<Digest256>& leaf_hashes() const { return levels_.front(); }

    size_t total_node_count() const {
        size_t n = 0;
        for (const auto& lvl : levels_) n += lvl.size();
        return n;
    }

    MerkleProof prove(uint64_t index) const {
        if (index >= leaf_count()) throw std::out_of_range("leaf index out of range");
        MerkleProof proof;
        proof.leaf_index = index;
        uint64_t pos = index;
        for (size_t lvl = 0; lvl + 1 < levels_.size(); ++lvl) {
            const auto& nodes = levels_[lvl];
            uint64_t sibling = pos ^ 1;
            if (sibling >= nodes.size()) sibling = pos; // duplicated last node
            proof.siblings.push_back(
                {nodes[sibling], (pos & 1) ? Side::Left : Side::Right});
            pos >>= 1;
        }
        return proof;
    }

private:
    explicit MerkleTree(std::vector<Digest256> leaf_hashes) {
        levels_.push_back(std::move(leaf_hashes));
        while (levels_.back().size() > 1) {
            const auto& prev = levels_.back();
            std::vector<Digest256> next;
            next.reserve((prev.size() + 1) / 2);
            for (size_t i = 0; i < prev.size(); i += 2) {
                const Digest256& left = prev[i];
                const Digest256& right = (i + 1 < prev.size()) ? prev[i + 1] : prev[i];
                Bytes cat;
                cat.reserve(64);
                append(cat, left.bytes);
                append(cat, right.bytes);
                next.push_back(sha256d(cat));
            }
            levels_.push_back(std::move(next));
        }
    }

    std::vector<std::vector<Digest256>> levels_;
};

inline bool merkle_verify_hash(const Digest256& root, Digest256 node, const MerkleProof& proof,
                               size_t max_height) {
    if (proof.siblings.size() > max_height) return false;
    for (const ProofStep& step : proof.siblings) {
        Bytes cat;
        cat.reserve(64);
        if (step.side == Side::Left) {
            append(cat, step.digest.bytes);
            append(cat, node.bytes);
        } else {
            append(cat, node.bytes);
            append(cat, step.digest.bytes);
        }
        node = sha256d(cat);
    }
    return node == root;
}

inline bool merkle_verify(const Digest256& root, const Bytes& leaf, const MerkleProof& proof,
                          size_t max_height) {
    return merkle_verify_hash(root, sha256d(leaf), proof, max_height);
}

} // namespace bca

#endif // BCA_MERKLE_HPP
