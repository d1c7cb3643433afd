#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "bca/bytes.hpp"
#include "bca/hash.hpp"
#include "bca/merkle.hpp"

using namespace bca;

namespace {

// Independent brute-force tree: builds every level as an explicit list and
// never goes through MerkleTree.
std::vector<std::vector<Digest256>> oracle_levels(const std::vector<Bytes>& leaves) {
    std::vector<std::vector<Digest256>> levels;
    std::vector<Digest256> current;
    for (const Bytes& leaf : leaves) current.push_back(sha256d(leaf));
    levels.push_back(current);
    while (current.size() > 1) {
        std::vector<Digest256> up;
        for (size_t i = 0; i < current.size(); i += 2) {
            Digest256 l = current[i];
            Digest256 r = (i + 1 < current.size()) ? current[i + 1] : current[i];
            Bytes cat(l.bytes.begin(), l.bytes.end());
            cat.insert(cat.end(), r.bytes.begin(), r.bytes.end());
            up.push_back(sha256d(cat));
        }
        levels.push_back(up);
        current = up;
    }
    return levels;
}

Digest256 oracle_root(const std::vector<Bytes>& leaves) { return oracle_levels(leaves).back()[0]; }

std::vector<Bytes> make_leaves(size_t n, Rng& rng) {
    std::vector<Bytes> leaves;
    for (size_t i = 0; i < n; ++i) leaves.push_back(rng.bytes(4 + rng.next_u64() % 40));
    return leaves;
}

} // namespace

TEST_CASE("single leaf tree is its own root") {
    Bytes a{'A'};
    MerkleTree tree = MerkleTree::build({a});
    CHECK(tree.root() == sha256d(a));
    MerkleProof proof = tree.prove(0);
    CHECK(proof.siblings.empty());
    CHECK(merkle_verify(tree.root(), a, proof, 0));
}

TEST_CASE("two leaves hash pairwise") {
    Bytes a{'A'}, b{'B'};
    Digest256 ha = sha256d(a), hb = sha256d(b);
    Bytes cat(ha.bytes.begin(), ha.bytes.end());
    cat.insert(cat.end(), hb.bytes.begin(), hb.bytes.end());
    MerkleTree tree = MerkleTree::build({a, b});
    CHECK(tree.root() == sha256d(cat));

    MerkleProof p0 = tree.prove(0);
    REQUIRE(p0.siblings.size() == 1);
    CHECK(p0.siblings[0].digest == hb);
    CHECK(p0.siblings[0].side == Side::Right);
}

TEST_CASE("odd level duplicates the last node") {
    Bytes a{'A'}, b{'B'}, c{'C'};
    CHECK(MerkleTree::build({a, b, c}).root() == oracle_root({a, b, c}));
    // explicitly: level 1 is [h(AB), h(CC)]
    Digest256 hc = sha256d(c);
    Bytes cc(hc.bytes.begin(), hc.bytes.end());
    cc.insert(cc.end(), hc.bytes.begin(), hc.bytes.end());
    auto levels = oracle_levels({a, b, c});
    CHECK(levels[1][1] == sha256d(cc));
}

TEST_CASE("empty leaf list is rejected") {
    CHECK_THROWS_AS(MerkleTree::build({}), std::invalid_argument);
}

TEST_CASE("prove rejects out-of-range index") {
    MerkleTree tree = MerkleTree::build({Bytes{'A'}});
    CHECK_THROWS_AS(tree.prove(1), std::out_of_range);
}

TEST_CASE("exhaustive oracle equivalence for sizes 1..32") {
    Rng rng(31);
    for (size_t n = 1; n <= 32; ++n) {
        std::vector<Bytes> leaves = make_leaves(n, rng);
        MerkleTree tree = MerkleTree::build(leaves);
        CHECK(tree.root() == oracle_root(leaves));
        size_t max_height = 0; // ceil(log2(max(n,2)))
        while ((size_t{1} << max_height) < std::max<size_t>(n, 2)) ++max_height;
        for (size_t i = 0; i < n; ++i) {
            MerkleProof proof = tree.prove(i);
            CHECK(merkle_verify(tree.root(), leaves[i], proof, max_height));
        }
    }
}

TEST_CASE("32 leaves give height-5 proofs; the height cap is enforced") {
    Rng rng(32);
    std::vector<Bytes> leaves = make_leaves(32, rng);
    MerkleTree tree = MerkleTree::build(leaves);
    MerkleProof proof = tree.prove(7);
    CHECK(proof.siblings.size() == 5);
    CHECK(merkle_verify(tree.root(), leaves[7], proof, 5));
    CHECK_FALSE(merkle_verify(tree.root(), leaves[7], proof, 4));
    // the 28-sibling cap is a pure length check
    MerkleProof tall;
    tall.siblings.resize(29);
    CHECK_FALSE(merkle_verify(tree.root(), leaves[7], tall, 28));
}

TEST_CASE("single-bit mutations break verification") {
    Rng rng(33);
    std::vector<Bytes> leaves = make_leaves(16, rng);
    MerkleTree tree = MerkleTree::build(leaves);
    int mutations = 0;
    for (size_t i = 0; i < 16; ++i) {
        MerkleProof proof = tree.prove(i);
        // leaf bit flips
        for (int k = 0; k < 3; ++k) {
            Bytes leaf = leaves[i];
            leaf[rng.next_u64() % leaf.size()] ^= static_cast<uint8_t>(1 << (rng.next_u64() % 8));
            CHECK_FALSE(merkle_verify(tree.root(), leaf, proof, 5));
            ++mutations;
        }
        // root bit flips
        for (int k = 0; k < 2; ++k) {
            Digest256 root = tree.root();
            root.bytes[rng.next_u64() % 32] ^= static_cast<uint8_t>(1 << (rng.next_u64() % 8));
            CHECK_FALSE(merkle_verify(root, leaves[i], proof, 5));
            ++mutations;
        }
        // sibling bit flips
        for (int k = 0; k < 3; ++k) {
            MerkleProof mutated = proof;
            auto& step = mutated.siblings[rng.next_u64() % mutated.siblings.size()];
            step.digest.bytes[rng.next_u64() % 32] ^=
                static_cast<uint8_t>(1 << (rng.next_u64() % 8));
            CHECK_FALSE(merkle_verify(tree.root(), leaves[i], mutated, 5));
            ++mutations;
        }
    }
    CHECK(mutations >= 100);
}

TEST_CASE("proof wire format round trips and rejects junk") {
    Rng rng(34);
    std::vector<Bytes> leaves = make_leaves(9, rng);
    MerkleTree tree = MerkleTree::build(leaves);
    for (size_t i = 0; i < 9; ++i) {
        MerkleProof proof = tree.prove(i);
        Bytes wire = proof.serialize();
        CHECK(wire.size() == 1 + proof.siblings.size() * 33);
        auto parsed = MerkleProof::parse(wire);
        REQUIRE(parsed.has_value());
        CHECK(parsed->siblings == proof.siblings);
    }
    CHECK_FALSE(MerkleProof::parse(Bytes{}).has_value());
    CHECK_FALSE(MerkleProof::parse(Bytes{2, 0}).has_value()); // truncated
    Bytes bad_side{1, 7};
    bad_side.resize(34, 0);
    CHECK_FALSE(MerkleProof::parse(bad_side).has_value());
}
