#ifndef BCA_ANALYSIS_HPP
#define BCA_ANALYSIS_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "bca/addr.hpp"
#include "bca/bytes.hpp"
#include "bca/hash.hpp"

namespace bca {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

inline BigInt pow2(unsigned exponent) { return BigInt(1) << exponent; }

inline double log2_of(const BigRational& x) {
    using Float = boost::multiprecision::cpp_bin_float_50;
    if (x <= 0) throw std::domain_error("log2 of non-positive value");
    Float num(boost::multiprecision::numerator(x));
    Float den(boost::multiprecision::denominator(x));
    Float bits = (log(num) - log(den)) / log(Float(2));
    return bits.convert_to<double>();
}

/// Expected spoofing cost in hash evaluations. The /3 terms stay exact
/// rationals; the floor and the log2 report are derived views.
struct AttackCost {
    BigRational expected_hashes_exact;

    BigInt expected_hashes_floor() const {
        return boost::multiprecision::numerator(expected_hashes_exact) /
               boost::multiprecision::denominator(expected_hashes_exact);
    }

    double security_bits() const { return log2_of(expected_hashes_exact); }
};

inline AttackCost t_cga(SecParam sec) {
    BigRational cost(pow2(59));
    if (sec.value() > 0) cost += BigRational(pow2(16 * sec.value() + 59), 3);
    return {cost};
}

inline AttackCost t_bca(SecParam sec, uint64_t n_max, uint64_t m_max) {
    if (n_max < 1 || m_max < 1) throw std::invalid_argument("N_max and M_max must be positive");
    BigRational cost(pow2(59));
    cost += BigRational(pow2(16 * sec.value() + 92), BigInt(3) * n_max * m_max);
    return {cost};
}

enum class Scheme { Cga, Bca };

inline Scheme scheme_from_name(const std::string& name) {
    if (name == "cga") return Scheme::Cga;
    if (name == "bca") return Scheme::Bca;
    throw std::invalid_argument("scheme must be 'cga' or 'bca'");
}

struct BranchCosts {
    AttackCost start_with_condition1;
    AttackCost start_with_condition2;
};

/// Both attack orderings: satisfy the puzzle condition first, or hit the
/// target identifier first. The reported spoofing cost is their minimum.
inline BranchCosts attack_branch_costs(Scheme scheme, SecParam sec, uint64_t n_max,
                                       uint64_t m_max) {
    int s = sec.value();
    if (scheme == Scheme::Cga) {
        AttackCost b1 = t_cga(sec);
        BigRational b2 = s == 0 ? BigRational(pow2(59))
                                : BigRational(pow2(16 * s) + pow2(16 * s + 59));
        return {b1, {b2}};
    }
    AttackCost b1 = t_bca(sec, n_max, m_max);
    BigRational b2(pow2(16 * (s + 2) + 1) + pow2(16 * (s + 2) + 59));
    return {b1, {b2}};
}

struct ComparisonRow {
    int sec;
    double cga_security_bits;
    double bca_security_bits;
    BigInt cga_expected_generation_hashes; // 2^(16*sec) puzzle evaluations
    BigInt bca_expected_generation_hashes; // always 1
};

inline std::vector<ComparisonRow> comparison_report(uint64_t n_max, uint64_t m_max) {
    std::vector<ComparisonRow> rows;
    for (int s = 0; s <= 7; ++s) {
        SecParam sec(s);
        rows.push_back({s, t_cga(sec).security_bits(), t_bca(sec, n_max, m_max).security_bits(),
                        s == 0 ? BigInt(0) : pow2(16 * s), BigInt(1)});
    }
    return rows;
}

// --- miniature spoof experiment ---

/// Desk-scale replay of the branch-1 spoofing attack with scaled exponents:
/// Hash1 truncated to 8 bits (59 -> 8) and a 4-bit-per-level puzzle
/// (16 -> 4). At sec=1 the expected cost is 2^8 + 2^12/3 hash evaluations.
inline uint64_t miniature_spoof_attack(Rng& rng, SecParam sec = SecParam(1)) {
    Bytes salt = rng.bytes(8);
    uint8_t target = static_cast<uint8_t>(rng.next_u64());

    std::array<uint8_t, 16> modifier{};
    rng.fill(modifier);
    auto increment = [](std::array<uint8_t, 16>& m) {
        for (int i = 15; i >= 0; --i)
            if (++m[i] != 0) break;
    };

    auto mini_hash2_ok = [&](const std::array<uint8_t, 16>& m) {
        Bytes input(m.begin(), m.end());
        input.push_back(0xee); // domain tag, outside the collision-count range
        append(input, salt);
        Digest256 d = sha256(input);
        int bits = 4 * sec.value();
        return (d.bytes[0] >> (8 - bits)) == 0;
    };
    auto mini_hash1 = [&](const std::array<uint8_t, 16>& m, uint8_t cc) {
        Bytes input(m.begin(), m.end());
        input.push_back(cc);
        append(input, salt);
        return sha256(input).bytes[0];
    };

    uint64_t evals = 0;
    while (true) {
        // condition (1): puzzle on the modifier, skipped entirely at sec=0
        if (sec.value() > 0) {
            while (true) {
                ++evals;
                if (mini_hash2_ok(modifier)) break;
                increment(modifier);
            }
        }
        // condition (2): three collision-count tries at the target identifier
        for (uint8_t cc = 0; cc <= 2; ++cc) {
            ++evals;
            if (mini_hash1(modifier, cc) == target) return evals;
        }
        increment(modifier);
    }
}

} // namespace bca

#endif // BCA_ANALYSIS_HPP
