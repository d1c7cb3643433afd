#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "bca/bytes.hpp"
#include "bca/cga.hpp"
#include "bca/keys.hpp"

using namespace bca;

namespace {

CgaParameters fixture_params(uint64_t key_seed = 1) {
    CgaParameters p;
    p.public_key = generate_keypair(key_seed).public_key;
    p.subnet_prefix = {0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 1};
    return p;
}

} // namespace

TEST_CASE("hash2 ignores prefix and collision count") {
    CgaParameters a = fixture_params();
    CgaParameters b = a;
    b.subnet_prefix = {0xfe, 0x80, 0, 0, 0, 0, 0, 0};
    b.collision_count = 2;
    CHECK(cga_hash2(a) == cga_hash2(b));
}

TEST_CASE("hash2 matches a direct concatenation oracle") {
    CgaParameters p = fixture_params();
    Bytes input;
    input.insert(input.end(), p.modifier.begin(), p.modifier.end());
    input.insert(input.end(), 9, 0); // zeroed prefix and collision count
    input.insert(input.end(), p.public_key.der.begin(), p.public_key.der.end());
    Digest256 expect = sha256(input);
    auto got = cga_hash2(p);
    CHECK(std::equal(got.begin(), got.end(), expect.bytes.begin()));
}

TEST_CASE("hash1 covers every field") {
    CgaParameters p = fixture_params();
    auto base = cga_hash1(p);

    CgaParameters changed_cc = p;
    changed_cc.collision_count = 1;
    CHECK(cga_hash1(changed_cc) != base);

    CgaParameters changed_prefix = p;
    changed_prefix.subnet_prefix[7] = 9;
    CHECK(cga_hash1(changed_prefix) != base);

    CgaParameters changed_mod = p;
    changed_mod.modifier[0] ^= 1;
    CHECK(cga_hash1(changed_mod) != base);

    CgaParameters changed_ext = p;
    changed_ext.extension = {1, 2, 3};
    CHECK(cga_hash1(changed_ext) != base);
}

TEST_CASE("hash1 input is 113 bytes with an 88-byte key and no extension") {
    CHECK(cga_hash1_preimage(fixture_params()).size() == 113);
}

TEST_CASE("sec=0 generation skips the puzzle") {
    Rng rng(51);
    CgaParameters p = fixture_params();
    CgaGenerated out = generate_cga(p.public_key,
                                    std::span<const uint8_t, 8>(p.subnet_prefix), SecParam(0),
                                    no_collisions(), rng);
    CHECK(out.hash2_evaluations == 0);
    CHECK(verify_cga(out.address, out.params).ok);
}

TEST_CASE("generated addresses always verify (sec 0 and 1)") {
    Rng rng(52);
    for (int i = 0; i < 100; ++i) {
        KeyPair kp = generate_keypair(uint64_t{100} + i);
        std::array<uint8_t, 8> prefix{};
        rng.fill(prefix);
        SecParam sec(i < 90 ? 0 : 1);
        CgaGenerated out =
            generate_cga(kp.public_key, prefix, sec, no_collisions(), rng);
        CHECK(verify_cga(out.address, out.params).ok);
        CHECK(extract_sec(out.address.iid) == sec);
    }
}

TEST_CASE("sec=1 puzzle averages about 2^16 evaluations") {
    Rng rng(53);
    KeyPair kp = generate_keypair(uint64_t{8});
    std::array<uint8_t, 8> prefix{0x20, 0x01, 0, 0, 0, 0, 0, 0};
    double total = 0;
    const int runs = 50;
    for (int i = 0; i < runs; ++i) {
        total += static_cast<double>(
            generate_cga(kp.public_key, prefix, SecParam(1), no_collisions(), rng)
                .hash2_evaluations);
    }
    double mean = total / runs;
    CHECK(mean > 65536.0 * 0.75);
    CHECK(mean < 65536.0 * 1.25);
}

TEST_CASE("parallel puzzle search finds a valid modifier") {
    Rng rng(54);
    KeyPair kp = generate_keypair(uint64_t{8});
    std::array<uint8_t, 8> prefix{0x20, 0x01, 0, 0, 0, 0, 0, 0};
    CgaGenerated out =
        generate_cga(kp.public_key, prefix, SecParam(1), no_collisions(), rng, 4);
    CHECK(verify_cga(out.address, out.params).ok);
}

TEST_CASE("DAD collisions advance the collision count, three abort") {
    Rng rng(55);
    CgaParameters p = fixture_params();

    int failures = 2;
    auto dad_two = [&](const Ipv6Address&) { return failures-- > 0; };
    CgaGenerated out = generate_cga(p.public_key,
                                    std::span<const uint8_t, 8>(p.subnet_prefix), SecParam(0),
                                    dad_two, rng);
    CHECK(out.params.collision_count == 2);
    CHECK(verify_cga(out.address, out.params).ok);

    auto dad_always = [](const Ipv6Address&) { return true; };
    CHECK_THROWS_AS(generate_cga(p.public_key,
                                 std::span<const uint8_t, 8>(p.subnet_prefix), SecParam(0),
                                 dad_always, rng),
                    CgaGenerationError);
}

TEST_CASE("verification failure reasons") {
    Rng rng(56);
    CgaParameters p = fixture_params();
    CgaGenerated out = generate_cga(p.public_key,
                                    std::span<const uint8_t, 8>(p.subnet_prefix), SecParam(1),
                                    no_collisions(), rng);

    SUBCASE("collision count above 2") {
        out.params.collision_count = 3;
        auto r = verify_cga(out.address, out.params);
        CHECK_FALSE(r.ok);
        CHECK(r.reason == CgaFailure::CollisionCount);
    }
    SUBCASE("prefix mismatch") {
        out.params.subnet_prefix[0] ^= 1;
        auto r = verify_cga(out.address, out.params);
        CHECK(r.reason == CgaFailure::PrefixMismatch);
    }
    SUBCASE("iid bit flip outside reserved bits") {
        out.address.iid.bits[5] ^= 0x10;
        auto r = verify_cga(out.address, out.params);
        CHECK(r.reason == CgaFailure::Hash1Mismatch);
    }
    SUBCASE("modifier swap breaks the puzzle condition") {
        // a random modifier almost surely fails the 16-bit zero condition,
        // and hash1 changes with it
        rng.fill(out.params.modifier);
        auto r = verify_cga(out.address, out.params);
        CHECK_FALSE(r.ok);
    }
}

TEST_CASE("verification costs exactly two digests for sec>=1") {
    Rng rng(57);
    CgaParameters p = fixture_params();
    CgaGenerated out = generate_cga(p.public_key,
                                    std::span<const uint8_t, 8>(p.subnet_prefix), SecParam(1),
                                    no_collisions(), rng);
    uint64_t before = digest_call_counter().load();
    CHECK(verify_cga(out.address, out.params).ok);
    CHECK(digest_call_counter().load() - before == 2);

    // sec=0 skips hash2
    CgaGenerated out0 = generate_cga(p.public_key,
                                     std::span<const uint8_t, 8>(p.subnet_prefix), SecParam(0),
                                     no_collisions(), rng);
    before = digest_call_counter().load();
    CHECK(verify_cga(out0.address, out0.params).ok);
    CHECK(digest_call_counter().load() - before == 1);
}

TEST_CASE("prefix mobility reuses the modifier") {
    Rng rng(58);
    CgaParameters p = fixture_params();
    CgaGenerated out = generate_cga(p.public_key,
                                    std::span<const uint8_t, 8>(p.subnet_prefix), SecParam(1),
                                    no_collisions(), rng);
    auto old_hash2 = cga_hash2(out.params);

    CgaParameters moved = out.params;
    moved.subnet_prefix = {0xfe, 0x80, 0, 0, 0, 0, 0, 0};
    CHECK(cga_hash2(moved) == old_hash2); // puzzle work carries over
    Ipv6Address new_addr = cga_address(moved, SecParam(1));
    CHECK(verify_cga(new_addr, moved).ok);
    CHECK(new_addr.iid != out.address.iid);
}

TEST_CASE("parameters file round trip") {
    Rng rng(59);
    CgaParameters p = fixture_params();
    rng.fill(p.modifier);
    p.collision_count = 1;
    p.extension = rng.bytes(13);
    Bytes ser = p.serialize();
    auto parsed = CgaParameters::parse(ser);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == p);

    Bytes truncated(ser.begin(), ser.end() - 1);
    CHECK_FALSE(CgaParameters::parse(truncated).has_value());
    Bytes bad_key = ser;
    bad_key[30] ^= 0xff; // corrupt inside the DER key
    CHECK_FALSE(CgaParameters::parse(bad_key).has_value());
}
