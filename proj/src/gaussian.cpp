#include "qmlab/gaussian.hpp"

#include <algorithm>
#include <cmath>

namespace qmlab::gauss {

double kls_width_to_internal(double sigma_k) { return sigma_k * std::sqrt(2.0 * M_PI); }

std::int64_t Gaussian1D::lo() const {
    return static_cast<std::int64_t>(std::ceil(c - tau * sigma));
}

std::int64_t Gaussian1D::hi() const {
    return static_cast<std::int64_t>(std::floor(c + tau * sigma));
}

double amp_1d(std::int64_t x, const Gaussian1D& g) {
    require(g.sigma > 0.0, Err::InvalidParams, "sigma must be positive");
    if (x < g.lo() || x > g.hi()) return 0.0;
    double d = static_cast<double>(x) - g.c;
    return std::exp(-M_PI * d * d / (2.0 * g.sigma * g.sigma));
}

Coherent1D coherent_gaussian_Z(const Gaussian1D& g, bool sample_mode, RngStream* rng,
                               double kappa_min) {
    require(g.sigma >= kappa_min, Err::WidthTooNarrow,
            "1-D width below the configured minimum");
    const std::int64_t lo = g.lo(), hi = g.hi();
    require(hi >= lo, Err::InternalError, "empty truncation window");
    const std::int64_t w = hi - lo + 1;

    Coherent1D out;
    double massSum = 0.0;
    std::vector<std::pair<Label, statekit::Complex>> entries;
    entries.reserve(static_cast<std::size_t>(w));
    for (std::int64_t x = lo; x <= hi; ++x) {
        double a = amp_1d(x, g);
        massSum += a * a;
        entries.push_back({single(x), a});
    }
    out.accept_prob = massSum / static_cast<double>(w);
    out.state = StateVector::from_entries(std::move(entries));
    out.state.amps /= std::sqrt(massSum);

    if (sample_mode) {
        require(rng != nullptr, Err::InvalidInput, "sample mode needs a stream");
        out.attempts = 0;
        for (;;) {
            ++out.attempts;
            std::int64_t x = lo + static_cast<std::int64_t>(rng->below(static_cast<std::uint64_t>(w)));
            double a = amp_1d(x, g);
            if (rng->real01() < a * a) break; // ancilla measured 0
        }
    }
    return out;
}

LatticeBasis gram_schmidt(const Eigen::MatrixXd& B) {
    LatticeBasis out;
    out.B = B;
    out.dim = static_cast<int>(B.cols());
    require(B.rows() >= B.cols() && B.cols() > 0, Err::InvalidInput, "basis shape");
    out.gso = B;
    for (int i = 0; i < out.dim; ++i) {
        for (int j = 0; j < i; ++j) {
            double denom = out.gso.col(j).squaredNorm();
            out.gso.col(i) -= (B.col(i).dot(out.gso.col(j)) / denom) * out.gso.col(j);
        }
        require(out.gso.col(i).norm() > 1e-9 * (1.0 + B.cwiseAbs().maxCoeff()),
                Err::SingularBasis, "basis columns are linearly dependent");
    }
    return out;
}

CovarianceSpec CovarianceSpec::make(const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& c) {
    require(Sigma.rows() == Sigma.cols() && Sigma.rows() == c.size(), Err::DimensionMismatch,
            "covariance shape");
    require((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-9, Err::InvalidParams,
            "covariance not symmetric");
    Eigen::MatrixXd SigmaInv = Sigma.inverse();
    Eigen::LLT<Eigen::MatrixXd> llt(SigmaInv);
    require(llt.info() == Eigen::Success, Err::InvalidParams,
            "covariance is not positive definite");
    CovarianceSpec spec;
    spec.Sigma = Sigma;
    spec.c = c;
    spec.factorU = Eigen::MatrixXd(llt.matrixL()).transpose();
    require((spec.factorU.transpose() * spec.factorU - SigmaInv).cwiseAbs().maxCoeff() <= 1e-9 *
                (1.0 + SigmaInv.cwiseAbs().maxCoeff()),
            Err::InternalError, "factorization does not recompose the inverse covariance");
    return spec;
}

namespace {

struct WorkBranch {
    std::vector<std::int64_t> coeffs;
    Eigen::VectorXd v; // accumulated lattice point (real coordinates)
    double amp = 1.0;
    std::int64_t anc_c = 0;
    std::int64_t anc_z = 0;
};

std::int64_t quant_center(double c) { return llround(c * 4294967296.0); }

} // namespace

EngineResult coherent_engine(const Eigen::MatrixXd& B, const Eigen::VectorXd& c, double sigma,
                             double kappa, double tau, bool audit) {
    LatticeBasis basis = gram_schmidt(B);
    const int n = basis.dim;
    require(c.size() == B.rows(), Err::DimensionMismatch, "center dimension");
    for (int i = 0; i < n; ++i)
        require(sigma >= kappa * basis.gso.col(i).norm(), Err::WidthTooNarrow,
                "sigma below kappa * max Gram-Schmidt norm");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> solver(B);

    std::vector<WorkBranch> branches(1);
    branches[0].coeffs.assign(static_cast<std::size_t>(n), 0);
    branches[0].v = Eigen::VectorXd::Zero(B.rows());

    // nearest-plane order: the Gram-Schmidt component along direction i is
    // frozen once z_i is chosen, giving the exact exponent identity
    // sum_i (z_i - c_i')^2 |g_i|^2 = |x - c|^2
    for (int i = n - 1; i >= 0; --i) {
        const Eigen::VectorXd gs = basis.gso.col(i);
        const double gs2 = gs.squaredNorm();
        const double sigmaP = sigma / std::sqrt(gs2);
        std::vector<WorkBranch> next;
        for (auto& br : branches) {
            const double cP = (c - br.v).dot(gs) / gs2;
            br.anc_c = quant_center(cP); // compute the center ancilla

            Gaussian1D g1{cP, sigmaP, tau};
            Coherent1D one = coherent_gaussian_Z(g1, false, nullptr, kappa);

            const std::int64_t uncompute = quant_center((c - br.v).dot(gs) / gs2);
            for (int zi = 0; zi < one.state.dim(); ++zi) {
                WorkBranch nb = br;
                const std::int64_t z = one.state.basis[static_cast<std::size_t>(zi)][0];
                nb.anc_z = z;                          // attach the 1-D register
                nb.anc_c -= uncompute;                 // uncompute the center
                nb.amp *= one.state.amps[zi].real();
                nb.coeffs[static_cast<std::size_t>(i)] = z;
                nb.v = br.v + static_cast<double>(z) * B.col(i); // v += z * b_i
                // recover z from the updated point alone and erase the register
                Eigen::VectorXd t = solver.solve(nb.v);
                double ti = t[i];
                require(std::fabs(ti - std::round(ti)) <= 1e-6, Err::InternalError,
                        "coefficient extraction is not integral");
                nb.anc_z -= static_cast<std::int64_t>(llround(ti));
                next.push_back(std::move(nb));
            }
        }
        branches = std::move(next);
    }

    EngineResult res;
    std::vector<std::pair<Label, statekit::Complex>> jointEntries;
    for (auto& br : branches) {
        res.ancilla_max_abs = std::max({res.ancilla_max_abs,
                                        std::fabs(static_cast<double>(br.anc_c)),
                                        std::fabs(static_cast<double>(br.anc_z))});
        if (audit) {
            Label l = br.coeffs;
            l.push_back(br.anc_c);
            l.push_back(br.anc_z);
            jointEntries.push_back({std::move(l), br.amp});
        }
        res.branches.push_back({std::move(br.coeffs), br.amp});
    }
    std::sort(res.branches.begin(), res.branches.end(),
              [](const EngineBranch& a, const EngineBranch& b) { return a.coeffs < b.coeffs; });
    if (audit) {
        StateVector joint = StateVector::from_entries(std::move(jointEntries));
        std::vector<std::pair<Label, statekit::Complex>> cleanEntries;
        for (const auto& br : res.branches) {
            Label l = br.coeffs;
            l.push_back(0);
            l.push_back(0);
            cleanEntries.push_back({std::move(l), br.amp});
        }
        StateVector clean = StateVector::from_entries(std::move(cleanEntries));
        res.ancilla_distance = statekit::pure_trace_distance(joint, clean);
        res.joint_with_ancillas = std::move(joint);
    }
    return res;
}

namespace {

StateVector branches_to_state(const std::vector<EngineBranch>& branches,
                              const std::function<Label(const std::vector<std::int64_t>&)>& lbl) {
    std::vector<std::pair<Label, statekit::Complex>> entries;
    entries.reserve(branches.size());
    for (const auto& b : branches) entries.push_back({lbl(b.coeffs), b.amp});
    StateVector s = StateVector::from_entries(std::move(entries));
    return s.normalized();
}

Label integer_point(const Eigen::MatrixXd& B, const std::vector<std::int64_t>& coeffs,
                    const Eigen::VectorXd& shift) {
    Eigen::VectorXd x = shift;
    for (int j = 0; j < B.cols(); ++j) x += static_cast<double>(coeffs[static_cast<std::size_t>(j)]) * B.col(j);
    Label l(static_cast<std::size_t>(x.size()));
    for (int k = 0; k < x.size(); ++k) {
        double r = std::round(x[k]);
        require(std::fabs(x[k] - r) <= 1e-6, Err::InvalidInput,
                "lattice point is not integral; use an integer basis");
        l[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(r);
    }
    return l;
}

} // namespace

CoherentLattice coherent_gaussian_lattice(const LatticeBasis& basis, const Eigen::VectorXd& c,
                                          double sigma, double kappa, double tau, bool audit) {
    EngineResult er = coherent_engine(basis.B, c, sigma, kappa, tau, audit);
    CoherentLattice out;
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(basis.B.rows());
    out.state = branches_to_state(er.branches,
                                  [&](const std::vector<std::int64_t>& z) { return integer_point(basis.B, z, zero); });
    out.coefficients = branches_to_state(er.branches, [](const std::vector<std::int64_t>& z) {
        return Label(z.begin(), z.end());
    });
    out.ancilla_max_abs = er.ancilla_max_abs;
    out.ancilla_distance = er.ancilla_distance;
    out.joint_with_ancillas = std::move(er.joint_with_ancillas);
    return out;
}

StateVector coherent_gaussian_cov(const LatticeBasis& basis, const CovarianceSpec& spec,
                                  double kappa, double tau) {
    for (int i = 0; i < basis.dim; ++i) {
        double q = basis.B.col(i).dot(spec.Sigma.inverse() * basis.B.col(i));
        require(q <= 1.0 / (kappa * kappa) + 1e-12, Err::WidthTooNarrow,
                "basis vector too long for the requested covariance");
    }
    Eigen::MatrixXd Bt = spec.factorU * basis.B;
    Eigen::VectorXd ct = spec.factorU * spec.c;
    EngineResult er = coherent_engine(Bt, ct, 1.0, kappa, tau, false);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(basis.B.rows());
    return branches_to_state(er.branches, [&](const std::vector<std::int64_t>& z) {
        return integer_point(basis.B, z, zero);
    });
}

Eigen::VectorXd classical_gpv_sample(const LatticeBasis& basis, const Eigen::VectorXd& c,
                                     double sigma, RngStream& rng, double tau) {
    const int n = basis.dim;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.B.rows());
    for (int i = n - 1; i >= 0; --i) {
        const Eigen::VectorXd gs = basis.gso.col(i);
        const double gs2 = gs.squaredNorm();
        const double cP = (c - v).dot(gs) / gs2;
        const double sigmaP = sigma / std::sqrt(gs2);
        Gaussian1D g1{cP, sigmaP, tau};
        std::vector<double> w;
        std::vector<std::int64_t> zs;
        for (std::int64_t z = g1.lo(); z <= g1.hi(); ++z) {
            double a = amp_1d(z, g1);
            w.push_back(a * a);
            zs.push_back(z);
        }
        std::int64_t z = zs[rng.pick_weighted(w)];
        v += static_cast<double>(z) * basis.B.col(i);
    }
    return v;
}

StateVector shifted_lattice_gaussian(const Eigen::VectorXd& y, const Eigen::MatrixXd& S,
                                     const CovarianceSpec& spec, double kappa, double tau) {
    LatticeBasis sb = gram_schmidt(S); // throws SingularBasis on dependence
    Eigen::MatrixXd SigmaInv = spec.Sigma.inverse();
    for (int i = 0; i < S.cols(); ++i) {
        double q = S.col(i).dot(SigmaInv * S.col(i));
        require(q <= 1.0 / (kappa * kappa) + 1e-12, Err::WidthTooNarrow,
                "short vector too long for the requested covariance");
    }
    Eigen::MatrixXd Bt = spec.factorU * S;
    Eigen::VectorXd ct = spec.factorU * (spec.c - y);
    EngineResult er = coherent_engine(Bt, ct, 1.0, kappa, tau, false);
    return branches_to_state(er.branches, [&](const std::vector<std::int64_t>& z) {
        return integer_point(S, z, y);
    });
}

} // namespace qmlab::gauss
