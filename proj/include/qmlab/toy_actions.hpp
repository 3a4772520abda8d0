#pragma once

#include "qmlab/invariant.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace qmlab::toy {

struct OracleWorldParams {
    int n0 = 8;                        // encoding bit length, |S| = 2^n0
    int n1 = 1;                        // hidden-string bit length
    int n2 = 2;                        // invariant output bit length
    std::int64_t p = 7;                // cyclic group order (prime)
    std::vector<std::int64_t> gens{1}; // group generators; walks use +/- each
};

// All oracles are truth tables sampled from the seed, so a world is a pure
// function of (params, seed) and re-derivable for fixtures.
struct OracleWorld {
    OracleWorldParams params;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> H;    // 2^n1 entries, values < 2^n2
    std::vector<std::int64_t> qenc; // permutation of [0, 2^n0)
    std::vector<std::int64_t> qdec; // inverse permutation
    std::vector<std::int64_t> penc; // (xbar * p + x) -> S element
    std::vector<std::int64_t> pdec; // S element -> packed (xbar * p + x), -1 outside image

    std::int64_t domain_size() const { return static_cast<std::int64_t>(qenc.size()); }
    bool encoded(std::int64_t e) const {
        return e >= 0 && e < domain_size() && pdec[static_cast<std::size_t>(e)] >= 0;
    }

    nlohmann::json to_json() const; // seed + params; tables re-derived on load
    static OracleWorld from_json(const nlohmann::json& j);
};

OracleWorld build_oracle_world(const OracleWorldParams& params, std::uint64_t seed);

// the walking oracle: R(P(xbar, x), g) = P(xbar, x + g mod p)
std::int64_t R(const OracleWorld& world, std::int64_t e, std::int64_t g);

// literal minting: uniform strings, encode via Q, erase via Q^-1, post-select
// membership in the image of P, then measure the invariant
invariant::BankNote oracle_mint(const OracleWorld& world, RngStream& rng);
// same, but also reporting the post-selection branch probability
struct OracleMintResult {
    invariant::BankNote note;
    double postselect_prob = 0.0;
};
OracleMintResult oracle_mint_detailed(const OracleWorld& world, RngStream& rng);

// adapter to the generic framework: domain = image(P), invariant = H of the
// hidden string, generators = {R(., +g), R(., -g)} for each configured g
invariant::WalkableInvariant as_walkable(const OracleWorld& world);

// sum of +/- g along a path word, reduced mod p: a winning path is a discrete
// log of the challenge displacement
std::int64_t dlog_from_path(const OracleWorld& world, const invariant::PathWord& p);

} // namespace qmlab::toy
