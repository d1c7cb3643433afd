// Command-line front end: key generation, registration against the simulated
// chain, CGA/BCA address generation and verification, spoofing-cost reports,
// and generation benchmarks.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bca/addr.hpp"
#include "bca/analysis.hpp"
#include "bca/bca.hpp"
#include "bca/cga.hpp"
#include "bca/chain.hpp"
#include "bca/keys.hpp"

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

bca::Rng make_rng(std::optional<uint64_t> seed) {
    return seed ? bca::Rng(*seed) : bca::Rng();
}

std::array<uint8_t, 8> parse_prefix(const std::string& text) {
    auto addr = bca::parse_ipv6(text);
    if (!addr) throw std::runtime_error("invalid IPv6 prefix: " + text);
    return addr->prefix;
}

bca::Ipv6Address parse_addr(const std::string& text) {
    auto addr = bca::parse_ipv6(text);
    if (!addr) throw std::runtime_error("invalid IPv6 address: " + text);
    return *addr;
}

bca::Bytes read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    return bca::Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const bca::Bytes& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

/// Opens an existing chain store or creates a fresh one with the profile.
bca::ChainStore open_or_create_chain(const std::string& path, const bca::PowProfile& profile) {
    if (!path.empty() && std::filesystem::exists(path)) {
        bca::ChainStore store = bca::ChainStore::open(path);
        if (store.profile().id != profile.id)
            throw std::runtime_error("chain store was written under a different PoW profile");
        return store;
    }
    return bca::ChainStore::create(path, profile);
}

void emit(bool as_json, const json& j, const std::string& text) {
    if (as_json) std::cout << j.dump(2) << "\n";
    else std::cout << text;
}

struct CommonFlags {
    std::optional<uint64_t> seed;
    bool json_out = false;
    std::string chain;
    std::string profile_name = "toy";
    unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_chain = false) {
    cmd->add_option("--seed", flags.seed, "Seed for deterministic randomness");
    cmd->add_flag("--json", flags.json_out, "Machine-readable output");
    cmd->add_option("--threads", flags.threads, "Worker threads for puzzle searches")
        ->check(CLI::Range(1u, 256u));
    if (with_chain) {
        cmd->add_option("--chain", flags.chain, "Chain store file");
        cmd->add_option("--profile", flags.profile_name, "PoW profile: mainnet or toy")
            ->check(CLI::IsMember({"mainnet", "toy"}));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cryptographically generated and Bitcoin-certified IPv6 addresses"};
    app.require_subcommand(1);

    int exit_code = kExitOk;

    // --- keygen ---
    CommonFlags kg;
    std::string kg_out;
    auto* keygen = app.add_subcommand("keygen", "Generate a secp256k1 key pair");
    keygen->add_option("--out", kg_out, "Key file path")->required();
    add_common(keygen, kg);
    keygen->callback([&] {
        bca::Rng rng = make_rng(kg.seed);
        bca::KeyPair kp;
        if (kg.seed) {
            std::array<uint8_t, 32> secret{};
            rng.fill(secret);
            kp = bca::keypair_from_secret(secret);
        } else {
            kp = bca::generate_keypair();
        }
        bca::save_keypair(kp, kg_out);
        json j{{"key_file", kg_out}, {"public_key", bca::to_hex(kp.public_key.der)}};
        emit(kg.json_out, j, "wrote key pair to " + kg_out + "\npublic key: " +
                                 bca::to_hex(kp.public_key.der) + "\n");
    });

    // --- register ---
    CommonFlags rg;
    std::string rg_key, rg_out;
    size_t rg_n = 32;
    int rg_sec = 0;
    auto* reg = app.add_subcommand("register", "Register a public key on the simulated chain");
    reg->add_option("--key", rg_key, "Key file")->required();
    reg->add_option("--n", rg_n, "Number of modifiers (1..32)")->check(CLI::Range(1, 32));
    reg->add_option("--sec", rg_sec, "Security level to mine at")->check(CLI::Range(0, 7));
    reg->add_option("--out", rg_out, "Bundle file to write")->required();
    add_common(reg, rg, true);
    reg->callback([&] {
        bca::Rng rng = make_rng(rg.seed);
        bca::KeyPair kp = bca::load_keypair(rg_key);
        bca::PowProfile profile = bca::PowProfile::from_name(rg.profile_name);
        if (profile.id == bca::ProfileId::Mainnet)
            throw std::runtime_error(
                "mining under the mainnet profile needs >=2^32 hashes; use --profile toy");
        bca::ChainStore chain = open_or_create_chain(rg.chain, profile);
        bca::RegistrationBundle bundle =
            bca::register_key(kp, rg_n, chain, bca::SecParam(rg_sec), rng);
        bca::save_bundle(bundle, rg_out);
        json j{{"bundle_file", rg_out},
               {"modifiers", rg_n},
               {"txid", bundle.transaction.txid().hex()},
               {"block_hash", bca::header_hash(bundle.header).hex()}};
        emit(rg.json_out, j,
             "registered key in tx " + bundle.transaction.txid().hex() + "\nbundle: " + rg_out +
                 "\n");
    });

    // --- modifiers ---
    CommonFlags md;
    std::string md_bundle;
    auto* mods = app.add_subcommand("modifiers", "List the modifiers of a bundle");
    mods->add_option("--bundle", md_bundle, "Bundle file")->required();
    add_common(mods, md);
    mods->callback([&] {
        bca::RegistrationBundle bundle = bca::load_bundle(md_bundle);
        json j{{"next_index", bundle.next_index}, {"modifiers", json::array()}};
        std::string text = "next_index: " + std::to_string(bundle.next_index) + "\n";
        for (size_t i = 0; i < bundle.modifiers.size(); ++i) {
            std::string hex = bca::to_hex(bundle.modifiers[i]);
            j["modifiers"].push_back(hex);
            text += std::to_string(i) + (i < bundle.next_index ? " (used) " : "        ") + hex +
                    "\n";
        }
        emit(md.json_out, j, text);
    });

    // --- mine ---
    CommonFlags mn;
    int mn_sec = 0;
    auto* mine = app.add_subcommand("mine", "Mine a block with a dummy transaction");
    mine->add_option("--sec", mn_sec, "Security level")->check(CLI::Range(0, 7));
    add_common(mine, mn, true);
    mine->callback([&] {
        bca::Rng rng = make_rng(mn.seed);
        bca::PowProfile profile = bca::PowProfile::from_name(mn.profile_name);
        if (profile.id == bca::ProfileId::Mainnet)
            throw std::runtime_error(
                "mining under the mainnet profile needs >=2^32 hashes; use --profile toy");
        bca::ChainStore chain = open_or_create_chain(mn.chain, profile);
        bca::Transaction tx;
        bca::Bytes payload = rng.bytes(32);
        std::copy(payload.begin(), payload.end(), tx.pubkey_hash.bytes.begin());
        tx.modifier_root = bca::sha256(payload);
        auto loc = chain.submit_and_mine(tx, bca::SecParam(mn_sec),
                                         static_cast<uint32_t>(rng.next_u64()));
        json j{{"height", loc.height},
               {"block_hash", bca::header_hash(chain.get_header(loc.height)).hex()}};
        emit(mn.json_out, j,
             "mined block at height " + std::to_string(loc.height) + "\n");
    });

    // --- cga ---
    auto* cga = app.add_subcommand("cga", "Classic CGA operations");
    cga->require_subcommand(1);

    CommonFlags cg;
    std::string cg_key, cg_prefix, cg_out;
    int cg_sec = 0;
    auto* cga_gen = cga->add_subcommand("gen", "Generate a CGA");
    cga_gen->add_option("--key", cg_key, "Key file")->required();
    cga_gen->add_option("--prefix", cg_prefix, "Subnet prefix (IPv6 text form)")->required();
    cga_gen->add_option("--sec", cg_sec, "Security level (0..3 at desk scale)")
        ->check(CLI::Range(0, 3));
    cga_gen->add_option("--out", cg_out, "Parameters file to write");
    add_common(cga_gen, cg);
    cga_gen->callback([&] {
        bca::Rng rng = make_rng(cg.seed);
        bca::KeyPair kp = bca::load_keypair(cg_key);
        auto prefix = parse_prefix(cg_prefix);
        bca::CgaGenerated out = bca::generate_cga(kp.public_key, prefix, bca::SecParam(cg_sec),
                                                  bca::no_collisions(), rng, cg.threads);
        if (!cg_out.empty()) write_file(cg_out, out.params.serialize());
        json j{{"address", bca::format_ipv6(out.address)},
               {"hash2_evaluations", out.hash2_evaluations},
               {"params_file", cg_out}};
        emit(cg.json_out, j, "address: " + bca::format_ipv6(out.address) + "\n");
    });

    CommonFlags cv;
    std::string cv_addr, cv_params;
    auto* cga_verify = cga->add_subcommand("verify", "Verify a CGA against its parameters");
    cga_verify->add_option("--addr", cv_addr, "Address (text form)")->required();
    cga_verify->add_option("--params", cv_params, "Parameters file")->required();
    add_common(cga_verify, cv);
    cga_verify->callback([&] {
        auto params = bca::CgaParameters::parse(read_file(cv_params));
        if (!params) throw std::runtime_error("malformed CGA parameters file");
        bca::CgaVerifyResult r = bca::verify_cga(parse_addr(cv_addr), *params);
        json j{{"ok", r.ok}, {"reason", bca::to_string(r.reason)}};
        emit(cv.json_out, j,
             r.ok ? std::string("valid\n")
                  : std::string("invalid: ") + bca::to_string(r.reason) + "\n");
        if (!r.ok) exit_code = kExitVerifyFailed;
    });

    // --- bca ---
    auto* bcacmd = app.add_subcommand("bca", "Bitcoin-certified address operations");
    bcacmd->require_subcommand(1);

    CommonFlags bg;
    std::string bg_bundle, bg_prefix, bg_out;
    std::optional<uint32_t> bg_index;
    auto* bca_gen = bcacmd->add_subcommand("gen", "Generate a BCA from a bundle");
    bca_gen->add_option("--bundle", bg_bundle, "Bundle file")->required();
    bca_gen->add_option("--prefix", bg_prefix, "Subnet prefix (IPv6 text form)")->required();
    bca_gen->add_option("--index", bg_index, "Explicit modifier index (default: next unused)");
    bca_gen->add_option("--out", bg_out, "Parameters file to write");
    add_common(bca_gen, bg);
    bca_gen->callback([&] {
        bca::RegistrationBundle bundle = bca::load_bundle(bg_bundle);
        auto prefix = parse_prefix(bg_prefix);
        bca::BcaGenerated out;
        std::string warning;
        if (bg_index) {
            out = bca::generate_bca(bundle, prefix, *bg_index, bca::no_collisions());
            if (*bg_index < bundle.next_index)
                warning = "warning: modifier " + std::to_string(*bg_index) +
                          " was already used; reuse may let an observer link addresses";
        } else {
            out = bca::generate_next_bca(bundle, prefix, bca::no_collisions());
            bca::save_bundle(bundle, bg_bundle);
        }
        if (!bg_out.empty()) write_file(bg_out, out.params.serialize());
        json j{{"address", bca::format_ipv6(out.address)},
               {"modifier", bca::to_hex(out.params.modifier)},
               {"params_file", bg_out}};
        if (!warning.empty()) j["warning"] = warning;
        std::string text = "address: " + bca::format_ipv6(out.address) + "\n";
        if (!warning.empty()) text += warning + "\n";
        emit(bg.json_out, j, text);
    });

    CommonFlags bv;
    std::string bv_addr, bv_params;
    auto* bca_verify = bcacmd->add_subcommand("verify", "Verify a BCA against its parameters");
    bca_verify->add_option("--addr", bv_addr, "Address (text form)")->required();
    bca_verify->add_option("--params", bv_params, "Parameters file")->required();
    add_common(bca_verify, bv, true);
    bca_verify->callback([&] {
        auto params = bca::BcaParameters::parse(read_file(bv_params));
        if (!params) throw std::runtime_error("malformed BCA parameters file");
        bca::PowProfile profile = bca::PowProfile::from_name(bv.profile_name);
        bca::BcaVerifyResult r = bca::verify_bca(parse_addr(bv_addr), *params, profile);
        json j{{"ok", r.ok}, {"reason", bca::to_string(r.reason)}};
        emit(bv.json_out, j,
             r.ok ? std::string("valid\n")
                  : std::string("invalid: ") + bca::to_string(r.reason) + "\n");
        if (!r.ok) exit_code = kExitVerifyFailed;
    });

    // --- spoof-cost ---
    CommonFlags sc;
    std::string sc_scheme;
    int sc_sec = 0;
    uint64_t sc_nmax = 32;
    uint64_t sc_mmax = uint64_t{1} << 28;
    bool sc_table = false;
    auto* spoof = app.add_subcommand("spoof-cost", "Expected cost of spoofing an address");
    spoof->add_option("--scheme", sc_scheme, "cga or bca")->check(CLI::IsMember({"cga", "bca"}));
    spoof->add_option("--sec", sc_sec, "Security level")->check(CLI::Range(0, 7));
    spoof->add_option("--nmax", sc_nmax, "Modifier cap N_max");
    spoof->add_option("--mmax", sc_mmax, "Per-block transaction cap M_max");
    spoof->add_flag("--table", sc_table, "Full CGA-vs-BCA comparison table");
    add_common(spoof, sc);
    spoof->callback([&] {
        if (sc_table) {
            auto rows = bca::comparison_report(sc_nmax, sc_mmax);
            json j = json::array();
            std::string text =
                "sec  CGA bits  BCA bits  CGA gen hashes        BCA gen hashes\n";
            char line[128];
            for (const auto& row : rows) {
                j.push_back({{"sec", row.sec},
                             {"cga_security_bits", row.cga_security_bits},
                             {"bca_security_bits", row.bca_security_bits},
                             {"cga_generation_hashes", row.cga_expected_generation_hashes.str()},
                             {"bca_generation_hashes", row.bca_expected_generation_hashes.str()}});
                std::snprintf(line, sizeof(line), "%3d  %8.1f  %8.1f  %-20s  %s\n", row.sec,
                              row.cga_security_bits, row.bca_security_bits,
                              row.cga_expected_generation_hashes.str().c_str(),
                              row.bca_expected_generation_hashes.str().c_str());
                text += line;
            }
            emit(sc.json_out, j, text);
            return;
        }
        if (sc_scheme.empty()) throw std::runtime_error("--scheme or --table is required");
        bca::Scheme scheme = bca::scheme_from_name(sc_scheme);
        bca::SecParam sec(sc_sec);
        bca::AttackCost cost = scheme == bca::Scheme::Cga
                                   ? bca::t_cga(sec)
                                   : bca::t_bca(sec, sc_nmax, sc_mmax);
        bca::BranchCosts branches = bca::attack_branch_costs(scheme, sec, sc_nmax, sc_mmax);
        char bits[64];
        std::snprintf(bits, sizeof(bits), "%.6f", cost.security_bits());
        json j{{"scheme", sc_scheme},
               {"sec", sc_sec},
               {"expected_hashes", cost.expected_hashes_floor().str()},
               {"security_bits", cost.security_bits()},
               {"branch1_bits", branches.start_with_condition1.security_bits()},
               {"branch2_bits", branches.start_with_condition2.security_bits()}};
        emit(sc.json_out, j,
             "scheme: " + sc_scheme + "\nsec: " + std::to_string(sc_sec) +
                 "\nexpected hashes: " + cost.expected_hashes_floor().str() +
                 "\nsecurity bits: " + bits + "\n");
    });

    // --- bench ---
    CommonFlags bn;
    std::string bn_scheme = "bca";
    int bn_sec = 0;
    unsigned bn_trials = 100;
    bool bn_allow_long = false;
    auto* bench = app.add_subcommand("bench", "Benchmark address generation");
    bench->add_option("--scheme", bn_scheme, "cga or bca")->check(CLI::IsMember({"cga", "bca"}));
    bench->add_option("--sec", bn_sec, "Security level")->check(CLI::Range(0, 7));
    bench->add_option("--trials", bn_trials, "Number of generation runs")
        ->check(CLI::PositiveNumber);
    bench->add_flag("--allow-long", bn_allow_long,
                    "Permit CGA runs above sec=1 (minutes to hours)");
    add_common(bench, bn);
    bench->callback([&] {
        bca::Rng rng = make_rng(bn.seed);
        bca::Scheme scheme = bca::scheme_from_name(bn_scheme);
        if (scheme == bca::Scheme::Cga && bn_sec > 1 && !bn_allow_long)
            throw std::runtime_error("CGA above sec=1 takes minutes or more; pass --allow-long");

        double total = 0, min_t = 1e300, max_t = 0, total_evals = 0;
        if (scheme == bca::Scheme::Cga) {
            bca::KeyPair kp = bca::generate_keypair(uint64_t{7});
            std::array<uint8_t, 8> prefix{0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 1};
            for (unsigned i = 0; i < bn_trials; ++i) {
                auto t0 = std::chrono::steady_clock::now();
                bca::CgaGenerated out =
                    bca::generate_cga(kp.public_key, prefix, bca::SecParam(bn_sec),
                                      bca::no_collisions(), rng, bn.threads);
                auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
                total += dt;
                min_t = std::min(min_t, dt);
                max_t = std::max(max_t, dt);
                total_evals += static_cast<double>(out.hash2_evaluations);
            }
        } else {
            bca::ChainStore chain = bca::ChainStore::create("", bca::PowProfile::toy());
            bca::KeyPair kp = bca::generate_keypair(uint64_t{7});
            bca::RegistrationBundle bundle =
                bca::register_key(kp, 32, chain, bca::SecParam(0), rng);
            std::array<uint8_t, 8> prefix{0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 1};
            for (unsigned i = 0; i < bn_trials; ++i) {
                uint32_t index = i % bundle.modifiers.size();
                auto t0 = std::chrono::steady_clock::now();
                bca::BcaGenerated out =
                    bca::generate_bca(bundle, prefix, index, bca::no_collisions());
                auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
                total += dt;
                min_t = std::min(min_t, dt);
                max_t = std::max(max_t, dt);
                total_evals += 1;
                (void)out;
            }
        }
        double mean = total / bn_trials;
        double mean_evals = total_evals / bn_trials;
        json j{{"scheme", bn_scheme},      {"sec", bn_sec},
               {"samples", bn_trials},     {"mean_time_s", mean},
               {"min_time_s", min_t},      {"max_time_s", max_t},
               {"mean_hash_evals", mean_evals}};
        char text[256];
        std::snprintf(text, sizeof(text),
                      "scheme: %s\nsec: %d\nsamples: %u\nmean time: %.9f s\nmin time: %.9f s\n"
                      "max time: %.9f s\nmean hash evals: %.1f\n",
                      bn_scheme.c_str(), bn_sec, bn_trials, mean, min_t, max_t, mean_evals);
        emit(bn.json_out, j, text);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return exit_code;
}
