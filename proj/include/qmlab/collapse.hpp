#pragma once

#include "qmlab/lattice_money.hpp"
#include "qmlab/statekit.hpp"

#include <map>
#include <vector>

namespace qmlab::channel {

using statekit::DensityMatrix;

struct RoundingGrid {
    std::int64_t q = 0;
    int t = 0;
    std::vector<std::int64_t> points; // {0, floor(q/t), ..., floor((t-1)q/t)}

    static RoundingGrid make(std::int64_t q, int t);
};

// nearest grid point in the circular metric; exact ties round downward
// (toward x - dist), which keeps every rounding cell the same size up to one
std::int64_t round_t(std::int64_t x, const RoundingGrid& grid);

// exact collision probability of rounding two independent uniform values
double p_t_exact(std::int64_t q, int t);

struct NoiseModel {
    double width = 1.0; // mass convention: Pr[e] proportional to exp(-pi e^2 / width^2)
    double tau = 8.0;
    std::vector<std::int64_t> support; // symmetric integer range
    std::vector<double> prob;          // normalized masses

    static NoiseModel make(double width, double tau = 8.0);
};

enum class FactorMode { Exact, Analytic };

// entrywise channel multiplier: factor(i, j) = Pr_b[round(b.y_i) = round(b.y_j)]
struct FactorTable {
    std::vector<VecI> support;
    Eigen::MatrixXd f;
};

// distribution of the scalar e . delta via exact per-coordinate convolution
std::map<std::int64_t, double> scalar_noise_distribution(const NoiseModel& noise,
                                                         const VecI& delta);

FactorTable factor_table_M1(const money::Instance& inst, const VecI& u, const RoundingGrid& grid,
                            const NoiseModel& noise, const std::vector<VecI>& support,
                            FactorMode mode);
FactorTable factor_table_M2(const money::Instance& inst, const RoundingGrid& grid,
                            const NoiseModel& noise, const std::vector<VecI>& support,
                            FactorMode mode);

DensityMatrix apply_M0(const DensityMatrix& rho, const money::Instance& inst);
DensityMatrix apply_M1(const DensityMatrix& rho, const money::Instance& inst,
                       const RoundingGrid& grid, const NoiseModel& noise, FactorMode mode);
DensityMatrix apply_M2(const DensityMatrix& rho, const money::Instance& inst,
                       const RoundingGrid& grid, const NoiseModel& noise, FactorMode mode);
DensityMatrix apply_factor_table(const DensityMatrix& rho, const FactorTable& table, int power = 1);

// max entrywise deviation of M1^t(rho) from (1/d) M1^(t d)(rho) + (1 - 1/d) rho
double lemma_m1_suite(const DensityMatrix& rho, const money::Instance& inst, const VecI& u,
                      const NoiseModel& noise, int t, int d, FactorMode mode);
// max entrywise deviation of M2^t(rho) from M0(M1^t(rho)) + p_t (rho - M0(rho))
double lemma_m2_suite(const DensityMatrix& rho, const money::Instance& inst, const VecI& u,
                      const NoiseModel& noise, int t, FactorMode mode);

struct CorollaryResult {
    double deviation = 0.0;
    double g = 0.0; // 1 - 1/d - p_t, must be nonnegative for the mixture form
};

CorollaryResult corollary_m_suite(const DensityMatrix& rho, const money::Instance& inst,
                                  const VecI& u, const NoiseModel& noise, int t, int d,
                                  FactorMode mode);

double commute_check(const DensityMatrix& rho, const money::Instance& inst, const VecI& u,
                     const RoundingGrid& grid, const NoiseModel& noise, FactorMode mode,
                     bool use_m2 = false);

// distinguisher abstraction for the advantage amplifier: a state preparation
// plus a linear accept functional, so both sampled and exact analyses apply
struct Distinguisher {
    virtual ~Distinguisher() = default;
    virtual DensityMatrix make_state() = 0;
    virtual double accept_prob(const DensityMatrix& rho) = 0;
};

// one sampled run of the amplified adversary on a concrete challenge vector b
int amplifier(Distinguisher& dist, const money::Instance& inst, const VecI& u,
              const RoundingGrid& grid, const NoiseModel& noise, int d, int lambda,
              bool real_case, RngStream& rng);

// exact signed advantage of the amplified adversary (challenge averaged)
double amplifier_advantage_exact(Distinguisher& dist, const money::Instance& inst, const VecI& u,
                                 const RoundingGrid& grid, const NoiseModel& noise, int d,
                                 int lambda);

} // namespace qmlab::channel
