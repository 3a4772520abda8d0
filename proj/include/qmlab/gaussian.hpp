#pragma once

#include "qmlab/statekit.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace qmlab::gauss {

using statekit::StateVector;

// Global amplitude convention: amplitude(x) proportional to
// exp(-pi * |x - c|^2 / (2 sigma^2)), the square root of the Gaussian mass
// function rho_sigma. Mass-parameter widths from other conventions convert via
// kls_width_to_internal below.
constexpr double kDefaultTau = 8.0;   // truncation at tau * sigma per direction
constexpr double kDefaultKappa = 4.0; // minimum sigma / gs-norm ratio

// width sigma_K of a mass function exp(-x^2 / (4 sigma_K^2)) mapped to ours
double kls_width_to_internal(double sigma_k);

struct Gaussian1D {
    double c = 0.0;
    double sigma = 1.0;
    double tau = kDefaultTau;

    std::int64_t lo() const;
    std::int64_t hi() const;
};

// sqrt of the Gaussian mass at integer x; zero outside the truncation window
double amp_1d(std::int64_t x, const Gaussian1D& g);

struct Coherent1D {
    StateVector state;      // exact renormalized truncated Gaussian state
    double accept_prob = 0; // probability of the accepting ancilla outcome
    int attempts = 1;       // restarts consumed in sample mode
};

// Uniform-superposition / amplitude-ancilla / measure construction of the
// 1-D integer Gaussian state. In sample mode the restart loop is replayed
// with the provided stream; otherwise the accepting branch is post-selected.
Coherent1D coherent_gaussian_Z(const Gaussian1D& g, bool sample_mode = false,
                               RngStream* rng = nullptr, double kappa_min = kDefaultKappa);

struct LatticeBasis {
    Eigen::MatrixXd B;   // columns are basis vectors (may be rectangular/tall)
    Eigen::MatrixXd gso; // Gram-Schmidt columns, same shape
    int dim = 0;         // number of basis vectors
};

LatticeBasis gram_schmidt(const Eigen::MatrixXd& B);

struct CovarianceSpec {
    Eigen::MatrixXd Sigma;
    Eigen::VectorXd c;
    Eigen::MatrixXd factorU; // factorU^T * factorU == Sigma^{-1}

    static CovarianceSpec make(const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& c);
};

// One GPV-style coherent sampling pass over the basis directions (last to
// first). Labels during the pass carry the two working registers (the center
// ancilla and the coordinate register) so their cleanup is observable.
struct CoherentLattice {
    StateVector state;              // labels are lattice vectors (integer B)
    StateVector coefficients;       // same state, coefficient labels
    double ancilla_max_abs = 0.0;   // largest leftover ancilla value
    double ancilla_distance = 0.0;  // trace distance from (state x |0,0>)
    std::optional<StateVector> joint_with_ancillas; // audit mode only
};

CoherentLattice coherent_gaussian_lattice(const LatticeBasis& basis, const Eigen::VectorXd& c,
                                          double sigma, double kappa = kDefaultKappa,
                                          double tau = kDefaultTau, bool audit = false);

StateVector coherent_gaussian_cov(const LatticeBasis& basis, const CovarianceSpec& spec,
                                  double kappa = kDefaultKappa, double tau = kDefaultTau);

// classical sampler used as the independent distribution oracle; returns the
// lattice vector (basis * coefficients)
Eigen::VectorXd classical_gpv_sample(const LatticeBasis& basis, const Eigen::VectorXd& c,
                                     double sigma, RngStream& rng, double tau = kDefaultTau);

// Gaussian state on the shifted lattice y + L(S), weights centered at spec.c
StateVector shifted_lattice_gaussian(const Eigen::VectorXd& y, const Eigen::MatrixXd& S,
                                     const CovarianceSpec& spec, double kappa = kDefaultKappa,
                                     double tau = kDefaultTau);

// --- shared engine, exposed for the ellipsoid cloning path ---

struct EngineBranch {
    std::vector<std::int64_t> coeffs;
    double amp = 0.0;
};

struct EngineResult {
    std::vector<EngineBranch> branches; // sorted by coefficient tuple
    double ancilla_max_abs = 0.0;
    double ancilla_distance = 0.0;
    std::optional<StateVector> joint_with_ancillas;
};

// coherent pass over arbitrary real basis columns; coefficients are the
// discrete degrees of freedom
EngineResult coherent_engine(const Eigen::MatrixXd& B, const Eigen::VectorXd& c, double sigma,
                             double kappa, double tau, bool audit);

} // namespace qmlab::gauss
