#include "qmlab/collapse.hpp"

#include <algorithm>
#include <cmath>

namespace qmlab::channel {

using money::Instance;
using money::label_to_vec;
using money::vec_to_label;

RoundingGrid RoundingGrid::make(std::int64_t q, int t) {
    require(q >= 2 && t >= 1 && t <= q, Err::InvalidParams, "rounding grid parameters");
    RoundingGrid g;
    g.q = q;
    g.t = t;
    for (int i = 0; i < t; ++i) g.points.push_back(static_cast<std::int64_t>(i) * q / t);
    for (std::size_t i = 1; i < g.points.size(); ++i)
        require(g.points[i] != g.points[i - 1], Err::InvalidParams, "grid points collide");
    return g;
}

std::int64_t round_t(std::int64_t x, const RoundingGrid& grid) {
    std::int64_t xx = umod(x, grid.q);
    std::int64_t best = grid.points[0];
    std::int64_t bestDist = std::numeric_limits<std::int64_t>::max();
    bool bestDownward = false;
    for (std::int64_t z : grid.points) {
        std::int64_t up = umod(z - xx, grid.q);   // distance walking upward from x
        std::int64_t down = umod(xx - z, grid.q); // distance walking downward
        std::int64_t dist = std::min(up, down);
        bool downward = down <= up;
        if (dist < bestDist || (dist == bestDist && downward && !bestDownward)) {
            best = z;
            bestDist = dist;
            bestDownward = downward;
        }
    }
    return best;
}

double p_t_exact(std::int64_t q, int t) {
    RoundingGrid grid = RoundingGrid::make(q, t);
    std::map<std::int64_t, std::int64_t> cell;
    for (std::int64_t x = 0; x < q; ++x) cell[round_t(x, grid)] += 1;
    double p = 0.0;
    for (const auto& [z, n] : cell) {
        double f = static_cast<double>(n) / static_cast<double>(q);
        p += f * f;
    }
    return p;
}

NoiseModel NoiseModel::make(double width, double tau) {
    require(width > 0.0, Err::InvalidParams, "noise width must be positive");
    NoiseModel nm;
    nm.width = width;
    nm.tau = tau;
    std::int64_t hi = static_cast<std::int64_t>(std::floor(tau * width));
    double total = 0.0;
    for (std::int64_t e = -hi; e <= hi; ++e) {
        double p = std::exp(-M_PI * static_cast<double>(e) * static_cast<double>(e) /
                            (width * width));
        nm.support.push_back(e);
        nm.prob.push_back(p);
        total += p;
    }
    for (double& p : nm.prob) p /= total;
    return nm;
}

std::map<std::int64_t, double> scalar_noise_distribution(const NoiseModel& noise,
                                                         const VecI& delta) {
    std::map<std::int64_t, double> dist{{0, 1.0}};
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
        if (delta[i] == 0) continue;
        std::map<std::int64_t, double> next;
        for (const auto& [s, p] : dist)
            for (std::size_t k = 0; k < noise.support.size(); ++k)
                next[s + noise.support[k] * delta[i]] += p * noise.prob[k];
        dist = std::move(next);
    }
    return dist;
}

namespace {

// per-call cache of rounding cells and shift collision counts
struct RoundingWork {
    RoundingGrid grid;
    std::vector<std::int64_t> cell;      // cell id per residue
    std::map<std::int64_t, std::int64_t> cellSize;
    std::map<std::int64_t, double> shiftCollision; // s -> Pr_z[cell(z+s)=cell(z)]

    explicit RoundingWork(const RoundingGrid& g) : grid(g) {
        cell.resize(static_cast<std::size_t>(g.q));
        for (std::int64_t x = 0; x < g.q; ++x) {
            cell[static_cast<std::size_t>(x)] = round_t(x, g);
            cellSize[cell[static_cast<std::size_t>(x)]] += 1;
        }
    }

    double collision_uniform_shift(std::int64_t s) {
        std::int64_t ss = umod(s, grid.q);
        auto it = shiftCollision.find(ss);
        if (it != shiftCollision.end()) return it->second;
        std::int64_t hits = 0;
        for (std::int64_t z = 0; z < grid.q; ++z)
            if (cell[static_cast<std::size_t>(umod(z + ss, grid.q))] ==
                cell[static_cast<std::size_t>(z)])
                ++hits;
        double p = static_cast<double>(hits) / static_cast<double>(grid.q);
        shiftCollision[ss] = p;
        return p;
    }

    // Pr_z[cell(c z + tau) = cell(z)] for a fixed multiplier c
    double collision_scaled(std::int64_t c, std::int64_t tau) {
        std::int64_t hits = 0;
        for (std::int64_t z = 0; z < grid.q; ++z) {
            std::int64_t v2 = umod(static_cast<std::int64_t>(
                                       (__int128)c * z % grid.q) + tau, grid.q);
            if (cell[static_cast<std::size_t>(v2)] == cell[static_cast<std::size_t>(z)]) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(grid.q);
    }

    double p_t() {
        double p = 0.0;
        for (const auto& [z, n] : cellSize) {
            double f = static_cast<double>(n) / static_cast<double>(grid.q);
            p += f * f;
        }
        return p;
    }
};

bool all_zero_mod(const VecI& v, std::int64_t q) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (umod(v[i], q) != 0) return false;
    return true;
}

// exact same-class collision probability: uniform cyclic shift z plus the
// scalar noise form s = e . (y - y'); when the class value is zero there is no
// uniform shift and the pair of forms (e.y, e.y') is convolved jointly
double exact_same_class_factor(RoundingWork& work, const NoiseModel& noise, const VecI& y,
                               const VecI& yp, bool uniform_shift) {
    if (uniform_shift) {
        double f = 0.0;
        for (const auto& [s, p] : scalar_noise_distribution(noise, VecI(y - yp)))
            f += p * work.collision_uniform_shift(s);
        return f;
    }
    // joint distribution over (e.y, e.y') by a paired convolution
    std::map<std::pair<std::int64_t, std::int64_t>, double> dist{{{0, 0}, 1.0}};
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 0 && yp[i] == 0) continue;
        std::map<std::pair<std::int64_t, std::int64_t>, double> next;
        for (const auto& [sv, p] : dist)
            for (std::size_t k = 0; k < noise.support.size(); ++k)
                next[{sv.first + noise.support[k] * y[i], sv.second + noise.support[k] * yp[i]}] +=
                    p * noise.prob[k];
        dist = std::move(next);
    }
    double f = 0.0;
    for (const auto& [sv, p] : dist) {
        std::int64_t c1 = work.cell[static_cast<std::size_t>(umod(sv.first, work.grid.q))];
        std::int64_t c2 = work.cell[static_cast<std::size_t>(umod(sv.second, work.grid.q))];
        if (c1 == c2) f += p;
    }
    return f;
}

double analytic_factor(const RoundingGrid& grid, const NoiseModel& noise, const VecI& delta) {
    double eAbs = 0.0;
    for (const auto& [s, p] : scalar_noise_distribution(noise, delta))
        eAbs += p * std::fabs(static_cast<double>(s));
    return 1.0 - static_cast<double>(grid.t) / static_cast<double>(grid.q) * eAbs;
}

} // namespace

FactorTable factor_table_M1(const Instance& inst, const VecI& u, const RoundingGrid& grid,
                            const NoiseModel& noise, const std::vector<VecI>& support,
                            FactorMode mode) {
    FactorTable table;
    table.support = support;
    const int n = static_cast<int>(support.size());
    table.f = Eigen::MatrixXd::Ones(n, n);
    for (const auto& y : support)
        require(mat_vec_mod(MatI(inst.A.transpose()), y, inst.q) == u, Err::MixedCoset,
                "support vector off the serial class");
    const bool uniform = !all_zero_mod(u, inst.q);
    RoundingWork work(grid);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double f;
            if (mode == FactorMode::Analytic) {
                f = analytic_factor(grid, noise, VecI(support[static_cast<std::size_t>(i)] -
                                                      support[static_cast<std::size_t>(j)]));
            } else {
                f = exact_same_class_factor(work, noise, support[static_cast<std::size_t>(i)],
                                            support[static_cast<std::size_t>(j)], uniform);
            }
            table.f(i, j) = table.f(j, i) = f;
        }
    }
    return table;
}

FactorTable factor_table_M2(const Instance& inst, const RoundingGrid& grid,
                            const NoiseModel& noise, const std::vector<VecI>& support,
                            FactorMode mode) {
    FactorTable table;
    table.support = support;
    const int n = static_cast<int>(support.size());
    table.f = Eigen::MatrixXd::Ones(n, n);
    RoundingWork work(grid);
    const double pt = work.p_t();

    std::vector<VecI> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] =
            mat_vec_mod(MatI(inst.C.transpose()), support[static_cast<std::size_t>(i)], inst.q);

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const VecI& wi = w[static_cast<std::size_t>(i)];
            const VecI& wj = w[static_cast<std::size_t>(j)];
            const VecI& yi = support[static_cast<std::size_t>(i)];
            const VecI& yj = support[static_cast<std::size_t>(j)];
            double f;
            if (wi == wj) {
                // same kernel coset: identical to the serial-class analysis
                f = (mode == FactorMode::Analytic)
                        ? analytic_factor(grid, noise, VecI(yi - yj))
                        : exact_same_class_factor(work, noise, yi, yj, !all_zero_mod(wi, inst.q));
            } else if (mode == FactorMode::Analytic) {
                f = pt;
            } else {
                bool ziZero = all_zero_mod(wi, inst.q);
                bool zjZero = all_zero_mod(wj, inst.q);
                if (ziZero || zjZero) {
                    // one side is a fixed scalar form, the other uniform
                    const VecI& fixedY = ziZero ? yi : yj;
                    double f2 = 0.0;
                    for (const auto& [s, p] : scalar_noise_distribution(noise, fixedY)) {
                        std::int64_t c =
                            work.cell[static_cast<std::size_t>(umod(s, grid.q))];
                        f2 += p * static_cast<double>(work.cellSize[c]) /
                              static_cast<double>(grid.q);
                    }
                    f = f2;
                } else {
                    // dependence test: wj == c * wi for a scalar c?
                    Eigen::Index piv = 0;
                    while (umod(wi[piv], inst.q) == 0) ++piv;
                    std::int64_t c = umod(static_cast<std::int64_t>(
                                              (__int128)umod(wj[piv], inst.q) *
                                              mod_inv(wi[piv], inst.q) % inst.q),
                                          inst.q);
                    bool proportional = true;
                    for (Eigen::Index k = 0; k < wi.size() && proportional; ++k)
                        proportional = umod(wj[k] - static_cast<std::int64_t>(
                                                        (__int128)c * wi[k] % inst.q),
                                            inst.q) == 0;
                    if (!proportional) {
                        // independent uniform pair: exactly p_t
                        f = pt;
                    } else {
                        // v2 = c v1 + e.(y' - c y) with v1 uniform
                        VecI delta = yj - c * yi;
                        double f2 = 0.0;
                        for (const auto& [s, p] : scalar_noise_distribution(noise, delta))
                            f2 += p * work.collision_scaled(c, umod(s, inst.q));
                        f = f2;
                    }
                }
            }
            table.f(i, j) = table.f(j, i) = f;
        }
    }
    return table;
}

DensityMatrix apply_M0(const DensityMatrix& rho, const Instance& inst) {
    DensityMatrix out = rho;
    std::vector<VecI> w(static_cast<std::size_t>(rho.dim()));
    for (int i = 0; i < rho.dim(); ++i)
        w[static_cast<std::size_t>(i)] =
            mat_vec_mod(MatI(inst.C.transpose()), label_to_vec(rho.basis[static_cast<std::size_t>(i)]), inst.q);
    for (int i = 0; i < rho.dim(); ++i)
        for (int j = 0; j < rho.dim(); ++j)
            if (w[static_cast<std::size_t>(i)] != w[static_cast<std::size_t>(j)]) out.mat(i, j) = 0.0;
    return out;
}

DensityMatrix apply_factor_table(const DensityMatrix& rho, const FactorTable& table, int power) {
    require(static_cast<int>(table.support.size()) == rho.dim(), Err::DimensionMismatch,
            "factor table support mismatch");
    DensityMatrix out = rho;
    for (int i = 0; i < rho.dim(); ++i)
        for (int j = 0; j < rho.dim(); ++j)
            out.mat(i, j) *= std::pow(table.f(i, j), power);
    return out;
}

namespace {

std::vector<VecI> support_of(const DensityMatrix& rho) {
    std::vector<VecI> s;
    s.reserve(rho.basis.size());
    for (const auto& l : rho.basis) s.push_back(label_to_vec(l));
    return s;
}

VecI serial_of_rho(const DensityMatrix& rho, const Instance& inst) {
    return mat_vec_mod(MatI(inst.A.transpose()), label_to_vec(rho.basis.front()), inst.q);
}

} // namespace

DensityMatrix apply_M1(const DensityMatrix& rho, const Instance& inst, const RoundingGrid& grid,
                       const NoiseModel& noise, FactorMode mode) {
    auto table = factor_table_M1(inst, serial_of_rho(rho, inst), grid, noise, support_of(rho), mode);
    return apply_factor_table(rho, table);
}

DensityMatrix apply_M2(const DensityMatrix& rho, const Instance& inst, const RoundingGrid& grid,
                       const NoiseModel& noise, FactorMode mode) {
    auto table = factor_table_M2(inst, grid, noise, support_of(rho), mode);
    return apply_factor_table(rho, table);
}

double lemma_m1_suite(const DensityMatrix& rho, const Instance& inst, const VecI& u,
                      const NoiseModel& noise, int t, int d, FactorMode mode) {
    auto support = support_of(rho);
    auto gridT = RoundingGrid::make(inst.q, t);
    auto gridTD = RoundingGrid::make(inst.q, t * d);
    auto fT = factor_table_M1(inst, u, gridT, noise, support, mode);
    auto fTD = factor_table_M1(inst, u, gridTD, noise, support, mode);
    DensityMatrix lhs = apply_factor_table(rho, fT);
    DensityMatrix r1 = apply_factor_table(rho, fTD);
    double dev = 0.0;
    const double invD = 1.0 / static_cast<double>(d);
    for (int i = 0; i < rho.dim(); ++i)
        for (int j = 0; j < rho.dim(); ++j)
            dev = std::max(dev, std::abs(lhs.mat(i, j) - invD * r1.mat(i, j) -
                                         (1.0 - invD) * rho.mat(i, j)));
    return dev;
}

double lemma_m2_suite(const DensityMatrix& rho, const Instance& inst, const VecI& u,
                      const NoiseModel& noise, int t, FactorMode mode) {
    auto support = support_of(rho);
    auto grid = RoundingGrid::make(inst.q, t);
    auto f2 = factor_table_M2(inst, grid, noise, support, mode);
    auto f1 = factor_table_M1(inst, u, grid, noise, support, mode);
    DensityMatrix lhs = apply_factor_table(rho, f2);
    DensityMatrix m1 = apply_factor_table(rho, f1);
    DensityMatrix m0m1 = apply_M0(m1, inst);
    DensityMatrix m0 = apply_M0(rho, inst);
    const double pt = p_t_exact(inst.q, t);
    double dev = 0.0;
    for (int i = 0; i < rho.dim(); ++i)
        for (int j = 0; j < rho.dim(); ++j)
            dev = std::max(dev, std::abs(lhs.mat(i, j) - m0m1.mat(i, j) -
                                         pt * (rho.mat(i, j) - m0.mat(i, j))));
    return dev;
}

CorollaryResult corollary_m_suite(const DensityMatrix& rho, const Instance& inst, const VecI& u,
                                  const NoiseModel& noise, int t, int d, FactorMode mode) {
    CorollaryResult res;
    const double pt = p_t_exact(inst.q, t);
    res.g = 1.0 - 1.0 / static_cast<double>(d) - pt;
    require(res.g >= -1e-12, Err::InvalidMixture,
            "1 - 1/d - p_t is negative; the mixture form needs a larger d");
    auto support = support_of(rho);
    auto grid2 = RoundingGrid::make(inst.q, t);
    auto gridTD = RoundingGrid::make(inst.q, t * d);
    auto f2 = factor_table_M2(inst, grid2, noise, support, mode);
    auto fTD = factor_table_M1(inst, u, gridTD, noise, support, mode);
    DensityMatrix lhs = apply_factor_table(rho, f2);
    DensityMatrix m0mtd = apply_M0(apply_factor_table(rho, fTD), inst);
    DensityMatrix m0 = apply_M0(rho, inst);
    const double invD = 1.0 / static_cast<double>(d);
    double dev = 0.0;
    for (int i = 0; i < rho.dim(); ++i)
        for (int j = 0; j < rho.dim(); ++j)
            dev = std::max(dev, std::abs(lhs.mat(i, j) - invD * m0mtd.mat(i, j) -
                                         res.g * m0.mat(i, j) - pt * rho.mat(i, j)));
    res.deviation = dev;
    return res;
}

double commute_check(const DensityMatrix& rho, const Instance& inst, const VecI& u,
                     const RoundingGrid& grid, const NoiseModel& noise, FactorMode mode,
                     bool use_m2) {
    auto support = support_of(rho);
    FactorTable table = use_m2 ? factor_table_M2(inst, grid, noise, support, mode)
                               : factor_table_M1(inst, u, grid, noise, support, mode);
    DensityMatrix a = apply_M0(apply_factor_table(rho, table), inst);
    DensityMatrix b = apply_factor_table(apply_M0(rho, inst), table);
    double dev = 0.0;
    for (int i = 0; i < rho.dim(); ++i)
        for (int j = 0; j < rho.dim(); ++j) dev = std::max(dev, std::abs(a.mat(i, j) - b.mat(i, j)));
    return dev;
}

int amplifier(Distinguisher& dist, const Instance& inst, const VecI& u, const RoundingGrid& grid,
              const NoiseModel& noise, int d, int lambda, bool real_case, RngStream& rng) {
    const double pt = p_t_exact(inst.q, grid.t);
    const double g = 1.0 - 1.0 / static_cast<double>(d) - pt;
    require(d * g > 1.0, Err::InvalidParams, "need d * g > 1 for the amplifier weights");
    std::vector<double> weights;
    for (int j = 0; j < lambda; ++j) weights.push_back(std::pow(d * g, -j));
    int j = static_cast<int>(rng.pick_weighted(weights));

    DensityMatrix rho = dist.make_state();
    if (j > 0) {
        auto gridTD = RoundingGrid::make(inst.q, grid.t * d);
        auto fTD = factor_table_M1(inst, u, gridTD, noise, support_of(rho), FactorMode::Exact);
        rho = apply_factor_table(rho, fTD, j);
    }

    // one challenge measurement from a concrete sample b
    VecI b(inst.m);
    if (real_case) {
        VecI r = VecI::Zero(inst.n);
        for (int i = 0; i < inst.n; ++i)
            r[i] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(inst.q)));
        b = mat_vec_mod(inst.A, r, inst.q);
    } else {
        VecI r = VecI::Zero(inst.m - inst.ell);
        for (int i = 0; i < inst.m - inst.ell; ++i)
            r[i] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(inst.q)));
        b = mat_vec_mod(inst.C, r, inst.q);
    }
    for (int i = 0; i < inst.m; ++i) {
        std::size_t k = rng.pick_weighted(noise.prob);
        b[i] = cmod(b[i] + noise.support[k], inst.q);
    }
    auto supp = support_of(rho);
    DensityMatrix measured = rho;
    for (int i = 0; i < rho.dim(); ++i) {
        __int128 accI = 0;
        for (int c = 0; c < inst.m; ++c) accI += static_cast<__int128>(b[c]) * supp[static_cast<std::size_t>(i)][c];
        std::int64_t vi = umod(static_cast<std::int64_t>(accI % inst.q), inst.q);
        for (int jj = 0; jj < rho.dim(); ++jj) {
            __int128 accJ = 0;
            for (int c = 0; c < inst.m; ++c)
                accJ += static_cast<__int128>(b[c]) * supp[static_cast<std::size_t>(jj)][c];
            std::int64_t vj = umod(static_cast<std::int64_t>(accJ % inst.q), inst.q);
            if (round_t(vi, grid) != round_t(vj, grid)) measured.mat(i, jj) = 0.0;
        }
    }
    int bit = rng.real01() < dist.accept_prob(measured) ? 1 : 0;
    return (j % 2 == 0) ? bit : 1 - bit;
}

double amplifier_advantage_exact(Distinguisher& dist, const Instance& inst, const VecI& u,
                                 const RoundingGrid& grid, const NoiseModel& noise, int d,
                                 int lambda) {
    const double pt = p_t_exact(inst.q, grid.t);
    const double g = 1.0 - 1.0 / static_cast<double>(d) - pt;
    require(d * g > 1.0, Err::InvalidParams, "need d * g > 1 for the amplifier weights");
    double T = 0.0;
    for (int j = 0; j < lambda; ++j) T += std::pow(d * g, -j);

    DensityMatrix rho = dist.make_state();
    auto support = support_of(rho);
    auto gridTD = RoundingGrid::make(inst.q, grid.t * d);
    auto fTD = factor_table_M1(inst, u, gridTD, noise, support, FactorMode::Exact);
    auto f1 = factor_table_M1(inst, u, grid, noise, support, FactorMode::Exact);
    auto f2 = factor_table_M2(inst, grid, noise, support, FactorMode::Exact);

    double delta = 0.0;
    DensityMatrix rhoJ = rho;
    for (int j = 0; j < lambda; ++j) {
        double p1 = dist.accept_prob(apply_factor_table(rhoJ, f1));
        double p2 = dist.accept_prob(apply_factor_table(rhoJ, f2));
        double sign = (j % 2 == 0) ? 1.0 : -1.0;
        delta += std::pow(d * g, -j) / T * sign * (p1 - p2);
        rhoJ = apply_factor_table(rhoJ, fTD);
    }
    return delta;
}

} // namespace qmlab::channel

namespace qmlab::money {

DistinguishResult distinguish_experiment(const StateVector& stateA, const StateVector& stateB,
                                         const Instance& inst, double noiseWidth, int t,
                                         int rounds, bool kernel_style) {
    auto noise = channel::NoiseModel::make(noiseWidth);
    auto grid = channel::RoundingGrid::make(inst.q, t);
    auto invariance = [&](const StateVector& psi) {
        StateVector s = psi.normalized();
        std::vector<VecI> support;
        support.reserve(static_cast<std::size_t>(s.dim()));
        for (const auto& l : s.basis) support.push_back(label_to_vec(l));
        channel::FactorTable table;
        if (kernel_style) {
            table = channel::factor_table_M2(inst, grid, noise, support, channel::FactorMode::Exact);
        } else {
            VecI u = mat_vec_mod(MatI(inst.A.transpose()), support.front(), inst.q);
            table = channel::factor_table_M1(inst, u, grid, noise, support,
                                             channel::FactorMode::Exact);
        }
        double f = 0.0;
        for (int i = 0; i < s.dim(); ++i)
            for (int j = 0; j < s.dim(); ++j)
                f += std::norm(s.amps[i]) * std::norm(s.amps[j]) *
                     std::pow(table.f(i, j), rounds);
        return f;
    };
    return {invariance(stateA), invariance(stateB)};
}

} // namespace qmlab::money
