#pragma once

#include "qmlab/modq.hpp"
#include "qmlab/rng.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace qmlab::klwe {

enum class Mode { Real, Random };

// challenge tuple (S, A, C, b) with ground-truth witnesses retained for tests;
// the "challenge" JSON export strips the mode and witnesses
struct KLWEInstance {
    int k = 0, n = 0, m = 0;
    std::int64_t q = 0;
    MatI S; // k x m, rows are the published short vectors
    MatI A; // m x n with S * A = 0 mod q
    MatI C; // m x (m - k), columns span ker(S) mod q
    VecI b;
    Mode mode = Mode::Real;
    int effective_k = 0; // differs from k when the rank-reduction fallback fired

    // witnesses (test export only)
    VecI key;   // r (Real) or r' (Random)
    VecI noise; // e with b = A r + e  /  b = C r' + e

    void check_invariants() const;
    nlohmann::json to_json(bool test_export) const;
    static KLWEInstance from_json(const nlohmann::json& j);
};

using RowSampler = std::function<VecI(RngStream&)>; // one row of S

struct NoiseSampler {
    double width = 1.0; // mass-convention Gaussian width
    double tau = 8.0;
    std::int64_t sample(RngStream& rng) const;
};

KLWEInstance gen_instance(int k, int n, int m, std::int64_t q, const RowSampler& rowSampler,
                          const NoiseSampler& noise, Mode mode, RngStream& rng);

struct AdjugatePair {
    MatI T;
    MatI Tadj;
    std::int64_t detT = 0;
};

// exact integer adjugate; Tadj * T == detT * I identically
AdjugatePair adjugate(const MatI& T);

struct ReductionParams {
    int k = 1;
    std::int64_t B = 1; // entry bound on the short-vector distribution
    double fN = 0.0;    // noise blow-up factor; defaults to (2B)^k * m^2 when 0
};

struct LiftResult {
    KLWEInstance instance;
    MatI U;                      // (m+k) x m integer kernel map
    std::int64_t detT = 0;
    std::int64_t max_abs_U = 0;  // asserted <= (2B)^k
    std::vector<int> chosen_columns;
    int effective_k = 0;
};

// constant-k reduction: plain LWE challenge (A, t) lifted to a k-LWE challenge
// over m + k samples by the adjugate kernel construction
LiftResult lift_lwe_to_klwe(const MatI& lweA, const VecI& lweT, const MatI& S, std::int64_t q,
                            const ReductionParams& params, double sigma, Mode mode,
                            RngStream& rng);

// b <- b + A r''; Real keys stay Real with a uniform key, Random instances
// keep their kernel class
KLWEInstance rerandomize_key(const KLWEInstance& inst, RngStream& rng);

struct AuditReport {
    int statistics = 0;
    int rejected_at_1pct = 0;
    std::vector<double> p_values;
    bool sa_violation = false; // any lifted instance with S A' != 0
    bool pass = false;

    nlohmann::json to_json() const;
};

using InstanceGen = std::function<KLWEInstance(RngStream&)>;

// two-sample chi-square battery over marginal statistics of the public tuple
AuditReport distribution_audit(const InstanceGen& genA, const InstanceGen& genB, int statistics,
                               int trials, RngStream& rng);

// noise growth for switching a modulus-q instance to q' with a (B, .)-bounded
// key distribution
double mod_switch_params(std::int64_t n, std::int64_t q, std::int64_t qPrime, double sigma,
                         double eps, double B);
// noise growth for trading dimension n for modulus q^k (gadget form);
// returns {sigma', new_dimension}
std::pair<double, std::int64_t> mod_exp_params(std::int64_t n, std::int64_t k, std::int64_t q,
                                               double sigma, double eps, double B);
// minimum key-switch width sqrt(sigma^2 + s^2) with the sample-count cost
std::pair<double, std::int64_t> noise_key_params(std::int64_t n, std::int64_t m, std::int64_t q,
                                                 double sigma, double eps);

struct HybridRow {
    std::string assumption;
    std::string dimension;
    std::string samples;
    double log2_modulus = 0.0;
    std::string key_dist;
    double log2_noise = 0.0; // log2 of the noise column entry
    std::string justification;
};

struct HybridConfig {
    std::int64_t n = 8;       // target lattice dimension after the trades
    std::int64_t m = 32;      // sample count
    double log2_q = 48.0;     // big modulus
    double log2_qPrime = 6.0; // small modulus
    double log2_eta = 8.0;    // modulus-to-noise gap of the k-LWE instance
    double log2_fN = 16.0;    // noise blow-up of the constant-k step
};

std::vector<HybridRow> hybrid_table(const HybridConfig& cfg);
nlohmann::json hybrid_table_json(const HybridConfig& cfg);
std::string hybrid_table_markdown(const HybridConfig& cfg);

} // namespace qmlab::klwe
