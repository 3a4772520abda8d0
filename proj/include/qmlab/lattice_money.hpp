#pragma once

#include "qmlab/gaussian.hpp"
#include "qmlab/modq.hpp"
#include "qmlab/statekit.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace qmlab::money {

using statekit::StateVector;

Label vec_to_label(const VecI& v);
VecI label_to_vec(const Label& l);

struct SchemeParams {
    std::int64_t q = 97;
    int n = 1;   // serial dimension
    int m = 3;   // vector dimension
    int ell = 1; // number of published short kernel vectors
};

struct Instance {
    std::int64_t q = 0;
    int n = 0, m = 0, ell = 0;
    MatI S; // m x ell, short integer columns
    MatI A; // m x n, A^T S = 0 mod q
    MatI C; // m x (m-ell), columns span ker(S^T) mod q

    void check_invariants() const;
    nlohmann::json to_json() const;
    static Instance from_json(const nlohmann::json& j);
};

// Mint superposition description: a finite integer box support with a weight
// function. Fixtures are products of per-coordinate weights, which keeps
// sampling and normalizers exact even when the box is too large to enumerate.
struct AmplitudeSpec {
    std::vector<std::pair<std::int64_t, std::int64_t>> box; // inclusive ranges
    std::function<double(const VecI&)> alpha;
    std::vector<std::vector<double>> coord_weights; // empty unless product-form

    static AmplitudeSpec product(std::vector<std::pair<std::int64_t, std::int64_t>> box,
                                 std::vector<std::vector<double>> tables);
    static AmplitudeSpec dense(std::vector<std::pair<std::int64_t, std::int64_t>> box,
                               std::function<double(const VecI&)> alpha);

    bool is_product() const { return !coord_weights.empty(); }
    bool in_box(const VecI& y) const;
    double alpha_at(const VecI& y) const; // 0 outside the box
    double box_volume() const;
    double sum_alpha_sq() const; // normalizer over the box
    double max_alpha_sq() const;
    VecI sample(RngStream& rng) const; // sample proportionally to alpha^2
};

using ShortSampler = std::function<VecI(RngStream&)>;

Instance setup(const SchemeParams& params, const ShortSampler& shortSampler, RngStream& rng);

struct MintResult {
    VecI u;
    StateVector state;
    double branch_prob = 0.0;
};

MintResult mint(const Instance& inst, const AmplitudeSpec& amp, RngStream& rng);

struct ProjectOutcome {
    VecI label; // measured C^T y value
    StateVector state;
    double branch_prob = 0.0;
};

// partial measurement of y -> C^T y; the sampled branch is the coset clone
ProjectOutcome attack_project(const StateVector& state, const Instance& inst, RngStream& rng);
std::vector<ProjectOutcome> attack_project_branches(const StateVector& state, const Instance& inst);

StateVector clone_gaussian(const VecI& y, const Instance& inst, const gauss::CovarianceSpec& spec,
                           double kappa = gauss::kDefaultKappa, double tau = gauss::kDefaultTau);

struct GoodEllipsoid {
    Eigen::MatrixXd Sigma; // ellipsoid quadratic form: (x-c)^T Sigma^{-1} (x-c) <= 1
    Eigen::VectorXd c;
    double eta = 1.0;   // upper bound on alpha^2 over the support
    double pPoly = 20.0;
    double qPoly = 1e4;
    double beta = 16.0; // widening factor for the carrier Gaussian
};

struct CloneResult {
    StateVector state;
    double step2_accept = 0.0; // carrier Gaussian -> uniform ellipsoid state
    double step3_accept = 0.0; // uniform -> alpha-weighted state
    double success_prob = 0.0;
    std::vector<VecI> sublattice; // reduced shift vectors, ambient coordinates
    int ellipsoid_points = 0;
};

CloneResult clone_ellipsoid(const VecI& y, const Instance& inst, const GoodEllipsoid& good,
                            const AmplitudeSpec& amp, double tau = gauss::kDefaultTau);
// replay of the two accepting measurements; true when both accept
bool clone_ellipsoid_sample(const CloneResult& plan, RngStream& rng);

struct GoodnessReport {
    double mass_in_ellipsoid = 0.0;    // condition 1 estimate
    double max_alpha_sq = 0.0;         // condition 2 witness
    double worst_heavy_fraction = 1.0; // condition 3: min over sampled y
    bool ok = false;
};

GoodnessReport validate_good_ellipsoid(const GoodEllipsoid& good, const AmplitudeSpec& amp,
                                       const Instance& inst, int samples, RngStream& rng);

// enumerate E cap (y + L(S)) in shift coordinates; returns integer w vectors
std::vector<VecI> ellipsoid_coset_points(const VecI& y, const Instance& inst,
                                         const GoodEllipsoid& good);

struct KLSParams {
    std::int64_t P = 4099;
    double sigma = 2.0;    // mass-convention width of the Gaussian coordinates
    std::int64_t Delta = 5;
    std::int64_t t = 3;
    std::int64_t k = 30;
    int d = 3;             // Gaussian coordinate count; m = d + 2
    double tau = gauss::kDefaultTau;
};

struct KLSInstance {
    Instance inst;
    AmplitudeSpec amp;
    VecI s0, s1, s2;
    std::int64_t two_gamma = 0; // 2*Gamma mod P = 2 t sigma Delta + 1
};

KLSInstance kls_instance(const KLSParams& kp, std::uint64_t seed);
// the unscaled serial vector (-Gamma, -1, 1, Delta/2, random...) mod P
VecI kls_vprime_literal(const KLSParams& kp, RngStream& rng);
GoodEllipsoid kls_good_ellipsoid(const KLSParams& kp);

struct FlawTrial {
    VecI u;
    VecI y_base, y1, y2, diff;
    std::int64_t c0 = 0, c1 = 0; // diff = c0 (s0 - Delta s1) + c1 s1
    bool decomposed = false;
    bool in_span_S = false;
    bool support_ok = false; // both clone states pass the support verifier
};

struct FlawReport {
    KLSParams params;
    int trials = 0;
    int n_decomposed = 0;
    int n_in_span = 0;
    int n_support_ok = 0;
    int n_new_short_vector = 0; // differences independent of S (must stay 0)
    std::vector<FlawTrial> detail;

    nlohmann::json to_json() const;
};

FlawReport kls_flaw_demo(const KLSParams& kp, int trials, RngStream& rng);

bool honest_support_verify(const StateVector& state, const VecI& u, const Instance& inst,
                           const std::vector<std::pair<std::int64_t, std::int64_t>>& bound);

struct DistinguishResult {
    double pA = 0.0;
    double pB = 0.0;
};

// exact invariance probabilities <psi| channel^rounds(|psi><psi|) |psi> under
// repeated rounding measurements; kernel_style selects kernel-sample noise
// vectors instead of serial-class ones (implemented with the channel module)
DistinguishResult distinguish_experiment(const StateVector& stateA, const StateVector& stateB,
                                         const Instance& inst, double noiseWidth, int t,
                                         int rounds, bool kernel_style);

} // namespace qmlab::money
