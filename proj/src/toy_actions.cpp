#include "qmlab/toy_actions.hpp"

#include "qmlab/mathutil.hpp"

#include <algorithm>
#include <memory>

namespace qmlab::toy {

using invariant::BankNote;
using invariant::WalkableInvariant;
using statekit::StateVector;

OracleWorld build_oracle_world(const OracleWorldParams& params, std::uint64_t seed) {
    require(params.n0 > 0 && params.n0 <= 16, Err::InvalidParams, "n0 out of desk range");
    require(params.n1 >= 0 && params.n2 > 0, Err::InvalidParams, "bad bit lengths");
    require(is_prime(params.p), Err::InvalidParams, "group order must be prime");
    require(!params.gens.empty(), Err::InvalidParams, "need at least one generator");
    const std::int64_t S = std::int64_t{1} << params.n0;
    const std::int64_t nx = std::int64_t{1} << params.n1;
    require(S >= nx * params.p, Err::InvalidParams, "2^n0 must cover 2^n1 * p encodings");
    for (auto g : params.gens)
        require(umod(g, params.p) != 0, Err::InvalidParams, "generator is the identity");

    OracleWorld w;
    w.params = params;
    w.seed = seed;
    RngStream rng(seed);

    auto hrng = rng.child("H");
    const std::int64_t hRange = std::int64_t{1} << params.n2;
    for (std::int64_t i = 0; i < nx; ++i)
        w.H.push_back(static_cast<std::int64_t>(hrng.child(static_cast<std::uint64_t>(i))
                                                    .below(static_cast<std::uint64_t>(hRange))));

    // Q: Fisher-Yates permutation of [0, 2^n0)
    w.qenc.resize(static_cast<std::size_t>(S));
    for (std::int64_t i = 0; i < S; ++i) w.qenc[static_cast<std::size_t>(i)] = i;
    auto qrng = rng.child("Q");
    for (std::int64_t i = S - 1; i > 0; --i)
        std::swap(w.qenc[static_cast<std::size_t>(i)],
                  w.qenc[qrng.below(static_cast<std::uint64_t>(i + 1))]);
    w.qdec.assign(static_cast<std::size_t>(S), 0);
    for (std::int64_t i = 0; i < S; ++i)
        w.qdec[static_cast<std::size_t>(w.qenc[static_cast<std::size_t>(i)])] = i;

    // P: random injection of (xbar, x) into S; realized by picking the first
    // nx*p entries of a fresh permutation of S
    std::vector<std::int64_t> shuffle(static_cast<std::size_t>(S));
    for (std::int64_t i = 0; i < S; ++i) shuffle[static_cast<std::size_t>(i)] = i;
    auto prng = rng.child("P");
    for (std::int64_t i = S - 1; i > 0; --i)
        std::swap(shuffle[static_cast<std::size_t>(i)],
                  shuffle[prng.below(static_cast<std::uint64_t>(i + 1))]);
    w.penc.assign(static_cast<std::size_t>(nx * params.p), 0);
    w.pdec.assign(static_cast<std::size_t>(S), -1);
    for (std::int64_t k = 0; k < nx * params.p; ++k) {
        std::int64_t e = shuffle[static_cast<std::size_t>(k)];
        w.penc[static_cast<std::size_t>(k)] = e;
        w.pdec[static_cast<std::size_t>(e)] = k;
    }
    return w;
}

std::int64_t R(const OracleWorld& world, std::int64_t e, std::int64_t g) {
    require(world.encoded(e), Err::NotAnEncodedPoint,
            "R is only defined on the image of the encoding oracle");
    std::int64_t packed = world.pdec[static_cast<std::size_t>(e)];
    std::int64_t xbar = packed / world.params.p;
    std::int64_t x = packed % world.params.p;
    std::int64_t xg = umod(x + g, world.params.p);
    return world.penc[static_cast<std::size_t>(xbar * world.params.p + xg)];
}

OracleMintResult oracle_mint_detailed(const OracleWorld& world, RngStream& rng) {
    const std::int64_t S = world.domain_size();
    std::vector<Label> strings;
    strings.reserve(static_cast<std::size_t>(S));
    for (std::int64_t s = 0; s < S; ++s) strings.push_back(single(s));
    StateVector st = statekit::uniform_superposition(strings);
    // compute Q into an output register and erase the input with Q^-1;
    // composed, that is the relabeling s -> Q(s)
    st = statekit::apply_bijection(
        st, [&](const Label& l) { return single(world.qenc[static_cast<std::size_t>(l[0])]); });

    // post-select membership in the image of P
    auto member = [&](const Label& l) { return single(world.encoded(l[0]) ? 1 : 0); };
    OracleMintResult out;
    for (auto& b : statekit::measure_branches(st, member)) {
        if (b.outcome == single(1)) {
            out.postselect_prob = b.prob;
            st = std::move(b.post);
        }
    }
    require(out.postselect_prob > 0.0, Err::InternalError, "empty encoding image");

    auto invFn = [&](const Label& l) {
        std::int64_t packed = world.pdec[static_cast<std::size_t>(l[0])];
        return single(world.H[static_cast<std::size_t>(packed / world.params.p)]);
    };
    auto res = statekit::measure_function(st, invFn, rng);
    out.note = BankNote{res.outcome, res.post};
    return out;
}

BankNote oracle_mint(const OracleWorld& world, RngStream& rng) {
    return oracle_mint_detailed(world, rng).note;
}

WalkableInvariant as_walkable(const OracleWorld& world) {
    auto w = std::make_shared<OracleWorld>(world);
    WalkableInvariant out;
    for (std::size_t e = 0; e < w->pdec.size(); ++e)
        if (w->pdec[e] >= 0) out.domain.push_back(single(static_cast<std::int64_t>(e)));
    std::sort(out.domain.begin(), out.domain.end());
    const int ng = static_cast<int>(w->params.gens.size());
    out.r = 2 * ng;
    out.inv_pair.resize(static_cast<std::size_t>(out.r));
    for (int j = 0; j < ng; ++j) {
        out.inv_pair[static_cast<std::size_t>(2 * j)] = 2 * j + 1;
        out.inv_pair[static_cast<std::size_t>(2 * j + 1)] = 2 * j;
    }
    out.inv = [w](const Label& l) {
        require(w->encoded(l[0]), Err::NotAnEncodedPoint, "invariant queried off the image of P");
        std::int64_t packed = w->pdec[static_cast<std::size_t>(l[0])];
        return single(w->H[static_cast<std::size_t>(packed / w->params.p)]);
    };
    out.sigma = [w](int i, const Label& l) {
        std::int64_t g = w->params.gens[static_cast<std::size_t>(i / 2)];
        return single(R(*w, l[0], (i % 2) == 0 ? g : -g));
    };
    return out;
}

std::int64_t dlog_from_path(const OracleWorld& world, const invariant::PathWord& p) {
    std::int64_t acc = 0;
    for (int s : p.steps) {
        std::int64_t g = world.params.gens[static_cast<std::size_t>(s / 2)];
        acc = umod(acc + ((s % 2) == 0 ? g : -g), world.params.p);
    }
    return acc;
}

nlohmann::json OracleWorld::to_json() const {
    nlohmann::json j;
    j["n0"] = params.n0;
    j["n1"] = params.n1;
    j["n2"] = params.n2;
    j["p"] = params.p;
    j["generators"] = params.gens;
    j["seed"] = seed;
    return j;
}

OracleWorld OracleWorld::from_json(const nlohmann::json& j) {
    OracleWorldParams p;
    p.n0 = j.at("n0").get<int>();
    p.n1 = j.at("n1").get<int>();
    p.n2 = j.at("n2").get<int>();
    p.p = j.at("p").get<std::int64_t>();
    p.gens = j.at("generators").get<std::vector<std::int64_t>>();
    return build_oracle_world(p, j.at("seed").get<std::uint64_t>());
}

} // namespace qmlab::toy
