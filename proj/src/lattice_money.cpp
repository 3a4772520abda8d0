#include "qmlab/lattice_money.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace qmlab::money {

using statekit::Complex;

Label vec_to_label(const VecI& v) {
    Label l(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) l[static_cast<std::size_t>(i)] = v[i];
    return l;
}

VecI label_to_vec(const Label& l) {
    VecI v(static_cast<Eigen::Index>(l.size()));
    for (std::size_t i = 0; i < l.size(); ++i) v[static_cast<Eigen::Index>(i)] = l[i];
    return v;
}

void Instance::check_invariants() const {
    require(is_prime(q), Err::InvalidParams, "modulus must be prime at desk scale");
    require(m > n + ell && ell >= 0, Err::InvalidParams, "dimension constraints");
    if (ell > 0) {
        require(mat_mul_mod(A.transpose(), S, q).isZero(), Err::InvalidParams, "A^T S != 0");
        require(mat_mul_mod(C.transpose(), S, q).isZero(), Err::InvalidParams, "C^T S != 0");
        require(rank_mod(S, q) == ell, Err::InvalidParams, "short vectors are dependent mod q");
    }
    require(rank_mod(C, q) == m - ell, Err::InvalidParams, "kernel basis is rank-deficient");
}

nlohmann::json Instance::to_json() const {
    nlohmann::json j;
    j["q"] = q;
    j["n"] = n;
    j["m"] = m;
    j["ell"] = ell;
    auto dump = [](const MatI& mat) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            std::vector<std::int64_t> row;
            for (Eigen::Index c = 0; c < mat.cols(); ++c) row.push_back(mat(i, c));
            rows.push_back(row);
        }
        return rows;
    };
    j["S"] = dump(S);
    j["A"] = dump(A);
    j["C"] = dump(C);
    return j;
}

Instance Instance::from_json(const nlohmann::json& j) {
    Instance inst;
    inst.q = j.at("q").get<std::int64_t>();
    inst.n = j.at("n").get<int>();
    inst.m = j.at("m").get<int>();
    inst.ell = j.at("ell").get<int>();
    auto load = [](const nlohmann::json& rows, int cols) {
        MatI mat(static_cast<Eigen::Index>(rows.size()), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto row = rows[i].get<std::vector<std::int64_t>>();
            require(static_cast<int>(row.size()) == cols, Err::InvalidInput, "ragged matrix rows");
            for (int c = 0; c < cols; ++c) mat(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)];
        }
        return mat;
    };
    inst.S = load(j.at("S"), inst.ell);
    inst.A = load(j.at("A"), inst.n);
    inst.C = load(j.at("C"), inst.m - inst.ell);
    inst.check_invariants();
    return inst;
}

AmplitudeSpec AmplitudeSpec::product(std::vector<std::pair<std::int64_t, std::int64_t>> box,
                                     std::vector<std::vector<double>> tables) {
    require(box.size() == tables.size(), Err::InvalidParams, "box/table length mismatch");
    for (std::size_t i = 0; i < box.size(); ++i)
        require(static_cast<std::int64_t>(tables[i].size()) == box[i].second - box[i].first + 1,
                Err::InvalidParams, "table does not cover the box range");
    AmplitudeSpec spec;
    spec.box = std::move(box);
    spec.coord_weights = std::move(tables);
    auto boxCopy = spec.box;
    auto tablesCopy = spec.coord_weights;
    spec.alpha = [boxCopy, tablesCopy](const VecI& y) {
        double a = 1.0;
        for (std::size_t i = 0; i < boxCopy.size(); ++i) {
            std::int64_t v = y[static_cast<Eigen::Index>(i)];
            if (v < boxCopy[i].first || v > boxCopy[i].second) return 0.0;
            a *= tablesCopy[i][static_cast<std::size_t>(v - boxCopy[i].first)];
        }
        return a;
    };
    return spec;
}

AmplitudeSpec AmplitudeSpec::dense(std::vector<std::pair<std::int64_t, std::int64_t>> box,
                                   std::function<double(const VecI&)> alpha) {
    AmplitudeSpec spec;
    spec.box = std::move(box);
    spec.alpha = std::move(alpha);
    return spec;
}

bool AmplitudeSpec::in_box(const VecI& y) const {
    if (static_cast<std::size_t>(y.size()) != box.size()) return false;
    for (std::size_t i = 0; i < box.size(); ++i) {
        std::int64_t v = y[static_cast<Eigen::Index>(i)];
        if (v < box[i].first || v > box[i].second) return false;
    }
    return true;
}

double AmplitudeSpec::alpha_at(const VecI& y) const { return in_box(y) ? alpha(y) : 0.0; }

double AmplitudeSpec::box_volume() const {
    double vol = 1.0;
    for (const auto& [lo, hi] : box) vol *= static_cast<double>(hi - lo + 1);
    return vol;
}

namespace {

template <typename Fn>
void enumerate_box(const std::vector<std::pair<std::int64_t, std::int64_t>>& box, Fn&& fn) {
    VecI y(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) y[static_cast<Eigen::Index>(i)] = box[i].first;
    for (;;) {
        fn(y);
        std::size_t i = 0;
        for (; i < box.size(); ++i) {
            if (y[static_cast<Eigen::Index>(i)] < box[i].second) {
                ++y[static_cast<Eigen::Index>(i)];
                for (std::size_t j = 0; j < i; ++j) y[static_cast<Eigen::Index>(j)] = box[j].first;
                break;
            }
        }
        if (i == box.size()) break;
    }
}

} // namespace

double AmplitudeSpec::sum_alpha_sq() const {
    if (is_product()) {
        double z = 1.0;
        for (const auto& t : coord_weights) {
            double s = 0.0;
            for (double w : t) s += w * w;
            z *= s;
        }
        return z;
    }
    require(box_volume() <= 2e6, Err::InvalidParams, "box too large to enumerate");
    double z = 0.0;
    enumerate_box(box, [&](const VecI& y) {
        double a = alpha(y);
        z += a * a;
    });
    return z;
}

double AmplitudeSpec::max_alpha_sq() const {
    if (is_product()) {
        double z = 1.0;
        for (const auto& t : coord_weights) {
            double s = 0.0;
            for (double w : t) s = std::max(s, w * w);
            z *= s;
        }
        return z;
    }
    require(box_volume() <= 2e6, Err::InvalidParams, "box too large to enumerate");
    double z = 0.0;
    enumerate_box(box, [&](const VecI& y) {
        double a = alpha(y);
        z = std::max(z, a * a);
    });
    return z;
}

VecI AmplitudeSpec::sample(RngStream& rng) const {
    require(is_product(), Err::InvalidParams, "sampling needs a product-form spec");
    VecI y(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) {
        std::vector<double> w;
        w.reserve(coord_weights[i].size());
        for (double a : coord_weights[i]) w.push_back(a * a);
        y[static_cast<Eigen::Index>(i)] = box[i].first + static_cast<std::int64_t>(rng.pick_weighted(w));
    }
    return y;
}

Instance setup(const SchemeParams& params, const ShortSampler& shortSampler, RngStream& rng) {
    require(is_prime(params.q), Err::InvalidParams, "modulus must be prime at desk scale");
    require(params.m > params.n + params.ell && params.ell >= 0, Err::InvalidParams,
            "need m > n + ell");
    Instance inst;
    inst.q = params.q;
    inst.n = params.n;
    inst.m = params.m;
    inst.ell = params.ell;

    inst.S = MatI::Zero(params.m, params.ell);
    if (params.ell > 0) {
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            for (int c = 0; c < params.ell; ++c) {
                VecI s = shortSampler(rng);
                require(s.size() == params.m, Err::InvalidParams, "short vector dimension");
                inst.S.col(c) = s;
            }
            ok = rank_mod(inst.S, params.q) == params.ell;
        }
        require(ok, Err::DegenerateShortSet, "short sampler kept producing dependent vectors");
    }

    // C = (kernel basis) * (random invertible mix); A = C * R so the serial
    // map is uniform over the kernel subject to A^T S = 0
    MatI K = params.ell > 0 ? kernel_basis_mod(MatI(inst.S.transpose()), params.q)
                            : MatI(MatI::Identity(params.m, params.m));
    require(K.cols() == params.m - params.ell, Err::InternalError, "kernel dimension");
    auto crng = rng.child("kernel-mix");
    inst.C = mat_mul_mod(K, random_invertible_mod(params.m - params.ell, params.q, crng), params.q);
    auto arng = rng.child("serial-map");
    inst.A = mat_mul_mod(inst.C, random_mat_mod(params.m - params.ell, params.n, params.q, arng),
                         params.q);
    while (rank_mod(inst.A, params.q) < params.n) {
        inst.A = mat_mul_mod(inst.C, random_mat_mod(params.m - params.ell, params.n, params.q, arng),
                             params.q);
    }
    inst.check_invariants();
    return inst;
}

namespace {

constexpr double kEnumerableVolume = 65536.0;

VecI serial_of(const Instance& inst, const VecI& y) {
    return mat_vec_mod(MatI(inst.A.transpose()), y, inst.q);
}

// enumerate {y in box : A^T y = u} when the box itself is too big; works for
// n = 1 by solving one coordinate with an invertible serial-map entry
std::vector<VecI> enumerate_class(const Instance& inst, const AmplitudeSpec& amp, const VecI& u) {
    std::vector<VecI> out;
    if (amp.box_volume() <= kEnumerableVolume) {
        enumerate_box(amp.box, [&](const VecI& y) {
            if (amp.alpha(y) != 0.0 && serial_of(inst, y) == u) out.push_back(y);
        });
        return out;
    }
    require(inst.n == 1, Err::InternalError, "large-box minting is implemented for n = 1");
    // pivot on the widest coordinate with an invertible entry
    int pivot = -1;
    std::int64_t width = -1;
    for (int i = 0; i < inst.m; ++i) {
        if (umod(inst.A(i, 0), inst.q) == 0) continue;
        std::int64_t wdt = amp.box[static_cast<std::size_t>(i)].second -
                           amp.box[static_cast<std::size_t>(i)].first;
        if (wdt > width) {
            width = wdt;
            pivot = i;
        }
    }
    require(pivot >= 0, Err::InternalError, "serial map has no invertible coordinate");
    std::int64_t apInv = mod_inv(inst.A(pivot, 0), inst.q);

    std::vector<std::pair<std::int64_t, std::int64_t>> rest;
    for (int i = 0; i < inst.m; ++i)
        if (i != pivot) rest.push_back(amp.box[static_cast<std::size_t>(i)]);
    enumerate_box(rest, [&](const VecI& partial) {
        VecI y(inst.m);
        __int128 acc = 0;
        int k = 0;
        for (int i = 0; i < inst.m; ++i) {
            if (i == pivot) continue;
            y[i] = partial[k++];
            acc += static_cast<__int128>(inst.A(i, 0)) * y[i];
        }
        std::int64_t needed = umod(u[0] - static_cast<std::int64_t>(acc % inst.q), inst.q);
        std::int64_t base = umod(static_cast<__int128>(needed) * apInv % inst.q, inst.q);
        auto [lo, hi] = amp.box[static_cast<std::size_t>(pivot)];
        // all representatives base + k q inside the coordinate range
        std::int64_t first = base + ((lo - base) / inst.q) * inst.q;
        while (first < lo) first += inst.q;
        for (std::int64_t v = first; v <= hi; v += inst.q) {
            y[pivot] = v;
            if (amp.alpha(y) != 0.0) out.push_back(y);
        }
    });
    return out;
}

StateVector class_state(const AmplitudeSpec& amp, const std::vector<VecI>& cls, double* mass_out) {
    std::vector<std::pair<Label, Complex>> entries;
    double mass = 0.0;
    for (const auto& y : cls) {
        double a = amp.alpha(y);
        mass += a * a;
        entries.push_back({vec_to_label(y), a});
    }
    require(mass > 0.0, Err::InternalError, "empty serial class");
    StateVector s = StateVector::from_entries(std::move(entries));
    s.amps /= std::sqrt(mass);
    if (mass_out) *mass_out = mass;
    return s;
}

} // namespace

MintResult mint(const Instance& inst, const AmplitudeSpec& amp, RngStream& rng) {
    require(static_cast<int>(amp.box.size()) == inst.m, Err::InvalidParams,
            "support dimension mismatch");
    MintResult res;
    if (amp.box_volume() <= kEnumerableVolume) {
        // exact path: build the full mint state and measure the serial map
        std::vector<std::pair<Label, Complex>> entries;
        enumerate_box(amp.box, [&](const VecI& y) {
            double a = amp.alpha(y);
            if (a != 0.0) entries.push_back({vec_to_label(y), a});
        });
        require(!entries.empty(), Err::InvalidParams, "amplitude support is empty");
        StateVector psi = StateVector::from_entries(std::move(entries)).normalized();
        auto m = statekit::measure_function(
            psi, [&](const Label& l) { return vec_to_label(serial_of(inst, label_to_vec(l))); },
            rng);
        res.u = label_to_vec(m.outcome);
        res.state = m.post;
        res.branch_prob = m.prob;
        return res;
    }
    // product path: sample the measurement outcome classically, then build the
    // collapsed class state by coset enumeration
    VecI ystar = amp.sample(rng);
    res.u = serial_of(inst, ystar);
    auto cls = enumerate_class(inst, amp, res.u);
    double mass = 0.0;
    res.state = class_state(amp, cls, &mass);
    res.branch_prob = mass / amp.sum_alpha_sq();
    return res;
}

std::vector<ProjectOutcome> attack_project_branches(const StateVector& state,
                                                    const Instance& inst) {
    auto g = [&](const Label& l) {
        return vec_to_label(mat_vec_mod(MatI(inst.C.transpose()), label_to_vec(l), inst.q));
    };
    std::vector<ProjectOutcome> out;
    for (auto& b : statekit::measure_branches(state, g))
        out.push_back({label_to_vec(b.outcome), std::move(b.post), b.prob});
    return out;
}

ProjectOutcome attack_project(const StateVector& state, const Instance& inst, RngStream& rng) {
    auto g = [&](const Label& l) {
        return vec_to_label(mat_vec_mod(MatI(inst.C.transpose()), label_to_vec(l), inst.q));
    };
    auto b = statekit::measure_function(state, g, rng);
    return {label_to_vec(b.outcome), std::move(b.post), b.prob};
}

StateVector clone_gaussian(const VecI& y, const Instance& inst, const gauss::CovarianceSpec& spec,
                           double kappa, double tau) {
    if (inst.ell == 0) return StateVector::basis_state(vec_to_label(y));
    Eigen::MatrixXd S = inst.S.cast<double>();
    Eigen::VectorXd yd = y.cast<double>();
    return gauss::shifted_lattice_gaussian(yd, S, spec, kappa, tau);
}

namespace {

struct WSpace {
    Eigen::MatrixXd G;      // quadratic form of the restricted ellipsoid
    Eigen::VectorXd w0;     // center in shift coordinates
    Eigen::MatrixXd SigmaW; // inverse of G
    double rho2 = 0.0;
};

WSpace restrict_ellipsoid(const VecI& y, const Instance& inst, const GoodEllipsoid& good) {
    Eigen::MatrixXd Sd = inst.S.cast<double>();
    Eigen::MatrixXd M = good.Sigma.inverse();
    Eigen::VectorXd r0 = y.cast<double>() - good.c;
    Eigen::MatrixXd Q = Sd.transpose() * M * Sd;
    Eigen::VectorXd b = Sd.transpose() * M * r0;
    WSpace w;
    w.w0 = -Q.ldlt().solve(b);
    w.rho2 = 1.0 - r0.dot(M * r0) + w.w0.dot(Q * w.w0);
    if (w.rho2 <= 0.0)
        fail(Err::EmptyCoset, "ellipsoid does not intersect the shifted span");
    w.G = Q / w.rho2;
    w.SigmaW = w.G.inverse();
    return w;
}

// integer points of the restricted ellipsoid (quadratic value <= bound)
std::vector<VecI> enumerate_quadratic(const Eigen::MatrixXd& G, const Eigen::VectorXd& center,
                                      double bound) {
    const int ell = static_cast<int>(G.rows());
    Eigen::MatrixXd H = G.inverse();
    std::vector<std::pair<std::int64_t, std::int64_t>> box;
    for (int i = 0; i < ell; ++i) {
        double rad = std::sqrt(std::max(0.0, bound * H(i, i)));
        box.push_back({static_cast<std::int64_t>(std::ceil(center[i] - rad - 1e-9)),
                       static_cast<std::int64_t>(std::floor(center[i] + rad + 1e-9))});
    }
    std::vector<VecI> pts;
    enumerate_box(box, [&](const VecI& t) {
        Eigen::VectorXd d = t.cast<double>() - center;
        if (d.dot(G * d) <= bound + 1e-9) pts.push_back(t);
    });
    return pts;
}

int rank_of(const std::vector<VecI>& vecs) {
    if (vecs.empty()) return 0;
    Eigen::MatrixXd m(vecs[0].size(), static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t i = 0; i < vecs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = vecs[i].cast<double>();
    return static_cast<int>(m.fullPivLu().rank());
}

// successive shortest independent lattice vectors in the transformed metric,
// kept while the squared norm stays <= 2
std::vector<VecI> reduce_sublattice(const WSpace& w, int ell) {
    std::vector<VecI> candidates;
    double bound = 2.0;
    for (int expand = 0; expand < 8 && candidates.empty(); ++expand) {
        candidates = enumerate_quadratic(w.G, Eigen::VectorXd::Zero(ell), bound);
        candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                        [](const VecI& t) { return t.isZero(); }),
                         candidates.end());
        if (!candidates.empty()) break;
        bound *= 2.0; // radius expansion; unused vectors are filtered below
    }
    std::sort(candidates.begin(), candidates.end(), [&](const VecI& a, const VecI& b) {
        double na = a.cast<double>().dot(w.G * a.cast<double>());
        double nb = b.cast<double>().dot(w.G * b.cast<double>());
        if (std::fabs(na - nb) > 1e-12) return na < nb;
        return vec_to_label(a) < vec_to_label(b);
    });
    std::vector<VecI> chosen;
    for (const auto& t : candidates) {
        double norm2 = t.cast<double>().dot(w.G * t.cast<double>());
        if (norm2 > 2.0 + 1e-9) break;
        std::vector<VecI> trial = chosen;
        trial.push_back(t);
        if (rank_of(trial) == static_cast<int>(trial.size())) chosen = std::move(trial);
        if (static_cast<int>(chosen.size()) == ell) break;
    }
    return chosen;
}

} // namespace

std::vector<VecI> ellipsoid_coset_points(const VecI& y, const Instance& inst,
                                         const GoodEllipsoid& good) {
    WSpace w = restrict_ellipsoid(y, inst, good);
    return enumerate_quadratic(w.G, w.w0, 1.0);
}

CloneResult clone_ellipsoid(const VecI& y, const Instance& inst, const GoodEllipsoid& good,
                            const AmplitudeSpec& amp, double tau) {
    require(inst.ell >= 1 && inst.ell <= 3, Err::InvalidParams,
            "ellipsoid cloning handles up to three shift directions");
    WSpace w = restrict_ellipsoid(y, inst, good);
    CloneResult res;

    std::vector<VecI> T = reduce_sublattice(w, inst.ell);
    for (const auto& t : T) res.sublattice.push_back(inst.S * t);

    // carrier state: Gaussian on L(T), center w0, covariance beta * SigmaW
    std::map<Label, double> carrier; // w-label -> amplitude
    if (T.empty()) {
        // no short shift fits inside the widened ellipsoid: the coset clone
        // collapses to the measured point itself
        carrier[vec_to_label(VecI::Zero(inst.ell))] = 1.0;
    } else {
        Eigen::MatrixXd Tm(inst.ell, static_cast<Eigen::Index>(T.size()));
        for (std::size_t i = 0; i < T.size(); ++i) Tm.col(static_cast<Eigen::Index>(i)) = T[i].cast<double>();
        Eigen::MatrixXd cov = good.beta * w.SigmaW;
        Eigen::LLT<Eigen::MatrixXd> llt(cov.inverse());
        require(llt.info() == Eigen::Success, Err::InternalError, "carrier covariance not PD");
        Eigen::MatrixXd U = Eigen::MatrixXd(llt.matrixL()).transpose();
        double kappa = std::sqrt(good.beta / 2.0) * (1.0 - 1e-9);
        auto er = gauss::coherent_engine(U * Tm, U * w.w0, 1.0, kappa, tau, false);
        for (const auto& br : er.branches) {
            VecI wv = VecI::Zero(inst.ell);
            for (std::size_t j = 0; j < br.coeffs.size(); ++j)
                wv += br.coeffs[j] * T[j];
            carrier[vec_to_label(wv)] += br.amp;
        }
    }

    // rejection 1: flatten the Gaussian onto the uniform ellipsoid state
    double p2 = 0.0;
    std::map<Label, double> uniformE;
    for (const auto& [lbl, a] : carrier) {
        Eigen::VectorXd d = label_to_vec(lbl).cast<double>() - w.w0;
        double val = d.dot(w.G * d);
        if (val > 1.0 + 1e-9) continue;
        double gamma = std::exp(-M_PI / good.beta) * std::exp(M_PI * val / (2.0 * good.beta));
        double kept = a * gamma;
        p2 += kept * kept;
        uniformE[lbl] = kept;
    }
    if (uniformE.empty()) fail(Err::EmptyCoset, "no lattice point inside the restricted ellipsoid");
    res.step2_accept = p2;
    res.ellipsoid_points = static_cast<int>(uniformE.size());

    // the carrier truncation must cover the whole ellipsoid intersection
    auto expected = enumerate_quadratic(w.G, w.w0, 1.0);
    std::set<Label> inTLattice;
    for (const auto& [lbl, a] : uniformE) inTLattice.insert(lbl);
    for (const auto& pt : expected) {
        // points outside L(T) are excluded by the sublattice claim; points in
        // L(T) must all be present in the carrier support
        if (T.empty()) {
            if (!pt.isZero()) continue;
        } else {
            Eigen::MatrixXd Tm(inst.ell, static_cast<Eigen::Index>(T.size()));
            for (std::size_t i = 0; i < T.size(); ++i) Tm.col(static_cast<Eigen::Index>(i)) = T[i].cast<double>();
            Eigen::VectorXd sol = Tm.colPivHouseholderQr().solve(pt.cast<double>());
            bool integral = (Tm * sol - pt.cast<double>()).norm() <= 1e-6;
            for (int i = 0; i < sol.size() && integral; ++i)
                integral = std::fabs(sol[i] - std::round(sol[i])) <= 1e-6;
            if (!integral) continue;
        }
        require(inTLattice.count(vec_to_label(pt)) > 0, Err::InternalError,
                "carrier truncation missed an ellipsoid point");
    }

    // rejection 2: reweight the uniform state by the target amplitudes
    const double invE = 1.0 / static_cast<double>(uniformE.size());
    double p3 = 0.0;
    std::vector<std::pair<Label, Complex>> entries;
    for (const auto& [lbl, a] : uniformE) {
        VecI x = y + inst.S * label_to_vec(lbl);
        double ax = amp.alpha_at(x);
        double ax2 = ax * ax;
        double etaX = ax2 <= good.eta ? 1.0 / good.eta : 1.0 / ax2;
        p3 += invE * etaX * ax2;
        double kept = std::sqrt(etaX) * ax;
        if (kept > 0.0) entries.push_back({vec_to_label(x), kept});
    }
    if (entries.empty()) fail(Err::EmptyCoset, "target amplitudes vanish on the whole coset");
    res.step3_accept = p3;
    res.success_prob = res.step2_accept * res.step3_accept;
    res.state = StateVector::from_entries(std::move(entries)).normalized();
    return res;
}

bool clone_ellipsoid_sample(const CloneResult& plan, RngStream& rng) {
    return rng.real01() < plan.step2_accept && rng.real01() < plan.step3_accept;
}

GoodnessReport validate_good_ellipsoid(const GoodEllipsoid& good, const AmplitudeSpec& amp,
                                       const Instance& inst, int samples, RngStream& rng) {
    GoodnessReport rep;
    rep.max_alpha_sq = amp.max_alpha_sq();
    Eigen::MatrixXd M = good.Sigma.inverse();
    int inside = 0;
    double worst = 1.0;
    for (int s = 0; s < samples; ++s) {
        auto srng = rng.child(static_cast<std::uint64_t>(s));
        VecI y = amp.sample(srng);
        Eigen::VectorXd d = y.cast<double>() - good.c;
        bool inE = d.dot(M * d) <= 1.0;
        if (inE) ++inside;
        if (!inE) continue;
        auto pts = ellipsoid_coset_points(y, inst, good);
        if (pts.empty()) continue;
        int heavy = 0;
        for (const auto& wv : pts) {
            VecI x = y + inst.S * wv;
            double a2 = amp.alpha_at(x);
            a2 *= a2;
            if (a2 >= good.eta / good.qPoly) ++heavy;
        }
        worst = std::min(worst, static_cast<double>(heavy) / static_cast<double>(pts.size()));
    }
    rep.mass_in_ellipsoid = static_cast<double>(inside) / static_cast<double>(samples);
    rep.worst_heavy_fraction = worst;
    rep.ok = rep.mass_in_ellipsoid >= 0.99 && rep.max_alpha_sq <= good.eta * (1.0 + 1e-9) &&
             worst >= 1.0 / good.pPoly;
    return rep;
}

KLSInstance kls_instance(const KLSParams& kp, std::uint64_t seed) {
    require(is_prime(kp.P) && kp.P <= 100000, Err::InvalidParams, "P must be a toy prime");
    require(kp.Delta > 0 && kp.Delta % 2 == 1, Err::InvalidParams, "Delta must be odd positive");
    require(kp.d >= 2 && kp.d + 2 <= 8, Err::InvalidParams, "d out of desk range");
    double tsd = static_cast<double>(kp.t) * kp.sigma * static_cast<double>(kp.Delta);
    require(std::fabs(tsd - std::round(tsd)) < 1e-9, Err::InvalidParams,
            "t * sigma * Delta must be integral");
    std::int64_t tsdI = static_cast<std::int64_t>(std::llround(tsd));
    require(kp.k >= 1 && kp.k <= tsdI, Err::InvalidParams, "k must satisfy k <= t sigma Delta");

    const int m = kp.d + 2;
    KLSInstance out;
    out.two_gamma = cmod(2 * tsdI + 1, kp.P);

    out.s0 = VecI::Zero(m);
    out.s0[2] = kp.Delta;
    out.s0[3] = -2;
    out.s1 = VecI::Zero(m);
    out.s1[1] = 1;
    out.s1[2] = 1;
    out.s2 = VecI::Zero(m);
    out.s2[0] = -2;
    out.s2[1] = 2 * tsdI + 1;

    Instance inst;
    inst.q = kp.P;
    inst.n = 1;
    inst.m = m;
    inst.ell = 3;
    inst.S = MatI::Zero(m, 3);
    inst.S.col(0) = out.s0;
    inst.S.col(1) = out.s1;
    inst.S.col(2) = out.s2;
    RngStream rng(seed);
    MatI K = kernel_basis_mod(MatI(inst.S.transpose()), kp.P);
    auto crng = rng.child("kernel-mix");
    inst.C = mat_mul_mod(K, random_invertible_mod(m - 3, kp.P, crng), kp.P);
    auto arng = rng.child("serial-map");
    do {
        inst.A = mat_mul_mod(inst.C, random_mat_mod(m - 3, 1, kp.P, arng), kp.P);
    } while (rank_mod(inst.A, kp.P) < 1);
    inst.check_invariants();
    out.inst = std::move(inst);

    // product amplitudes: bit, uniform window, Gaussian coordinates
    std::vector<std::pair<std::int64_t, std::int64_t>> box;
    std::vector<std::vector<double>> tables;
    box.push_back({0, 1});
    tables.push_back({1.0, 1.0});
    box.push_back({-kp.k, kp.k});
    tables.push_back(std::vector<double>(static_cast<std::size_t>(2 * kp.k + 1), 1.0));
    const double sigmaInternal = gauss::kls_width_to_internal(kp.sigma);
    gauss::Gaussian1D g{0.0, sigmaInternal, kp.tau};
    for (int i = 0; i < kp.d; ++i) {
        box.push_back({g.lo(), g.hi()});
        std::vector<double> t;
        for (std::int64_t x = g.lo(); x <= g.hi(); ++x) t.push_back(gauss::amp_1d(x, g));
        tables.push_back(std::move(t));
    }
    out.amp = AmplitudeSpec::product(std::move(box), std::move(tables));
    return out;
}

VecI kls_vprime_literal(const KLSParams& kp, RngStream& rng) {
    const int m = kp.d + 2;
    double tsd = static_cast<double>(kp.t) * kp.sigma * static_cast<double>(kp.Delta);
    std::int64_t tsdI = static_cast<std::int64_t>(std::llround(tsd));
    std::int64_t gamma = cmod((kp.P + 1) / 2 + tsdI, kp.P); // 1/2 + t sigma Delta mod P
    VecI v(m);
    v[0] = cmod(-gamma, kp.P);
    v[1] = -1;
    v[2] = 1;
    v[3] = cmod((kp.Delta + kp.P) / 2, kp.P); // Delta/2 mod P, Delta odd
    for (int i = 4; i < m; ++i)
        v[i] = cmod(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(kp.P))), kp.P);
    return v;
}

GoodEllipsoid kls_good_ellipsoid(const KLSParams& kp) {
    const int m = kp.d + 2;
    const double sigmaInternal = gauss::kls_width_to_internal(kp.sigma);
    GoodEllipsoid good;
    // semi-axes: 2 for the bit, a padded window for j, and wide Gaussian axes;
    // the padding keeps condition 1 solid over desk-scale trial counts
    Eigen::VectorXd axes(m);
    axes[0] = 2.0;
    axes[1] = 1.2 * static_cast<double>(kp.k) + 2.0;
    for (int i = 2; i < m; ++i) axes[i] = 6.5 * sigmaInternal;
    good.Sigma = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) good.Sigma(i, i) = axes[i] * axes[i];
    good.c = Eigen::VectorXd::Zero(m);
    good.c[0] = 0.5;
    good.beta = 16.0;
    good.pPoly = 20.0;
    good.qPoly = 1e4;
    return good;
}

bool honest_support_verify(const StateVector& state, const VecI& u, const Instance& inst,
                           const std::vector<std::pair<std::int64_t, std::int64_t>>& bound) {
    require(static_cast<int>(bound.size()) == inst.m, Err::InvalidParams, "bound dimension");
    for (const auto& lbl : state.basis) {
        VecI y = label_to_vec(lbl);
        if (serial_of(inst, y) != u) return false;
        for (int i = 0; i < inst.m; ++i)
            if (y[i] < bound[static_cast<std::size_t>(i)].first ||
                y[i] > bound[static_cast<std::size_t>(i)].second)
                return false;
    }
    return true;
}

namespace {

VecI sample_support(const StateVector& s, RngStream& rng) {
    std::vector<double> w(static_cast<std::size_t>(s.dim()));
    for (int i = 0; i < s.dim(); ++i) w[static_cast<std::size_t>(i)] = std::norm(s.amps[i]);
    return label_to_vec(s.basis[rng.pick_weighted(w)]);
}

} // namespace

FlawReport kls_flaw_demo(const KLSParams& kp, int trials, RngStream& rng) {
    FlawReport rep;
    rep.params = kp;
    rep.trials = trials;
    KLSInstance kls = kls_instance(kp, rng.child("instance").next_u64());
    GoodEllipsoid good = kls_good_ellipsoid(kp);
    // eta: the exact maximum amplitude-squared over the support
    good.eta = kls.amp.max_alpha_sq();

    for (int trial = 0; trial < trials; ++trial) {
        auto trng = rng.child(static_cast<std::uint64_t>(trial));
        FlawTrial ft;
        auto minted = mint(kls.inst, kls.amp, trng);
        ft.u = minted.u;
        auto projected = attack_project(minted.state, kls.inst, trng);
        ft.y_base = sample_support(projected.state, trng);

        CloneResult clone = clone_ellipsoid(ft.y_base, kls.inst, good, kls.amp, kp.tau);
        ft.support_ok = honest_support_verify(clone.state, ft.u, kls.inst, kls.amp.box);

        ft.y1 = sample_support(clone.state, trng);
        ft.y2 = sample_support(clone.state, trng);
        ft.diff = ft.y1 - ft.y2;

        // integer decomposition over {s0 - Delta s1, s1}
        VecI d0 = kls.s0 - kp.Delta * kls.s1;
        bool ok = ft.diff[3] % 2 == 0;
        if (ok) {
            ft.c0 = -ft.diff[3] / 2;
            ft.c1 = ft.diff[2];
            ok = (ft.diff - ft.c0 * d0 - ft.c1 * kls.s1).isZero();
        }
        ft.decomposed = ok;

        // the difference never leaves the integer span of S: coefficients
        // (c0, c1 - Delta c0, 0) witness membership, so no new short vector
        VecI coeff(3);
        coeff << ft.c0, ft.c1 - kp.Delta * ft.c0, 0;
        ft.in_span_S = ok && (kls.inst.S * coeff - ft.diff).isZero();

        rep.n_decomposed += ft.decomposed ? 1 : 0;
        rep.n_in_span += ft.in_span_S ? 1 : 0;
        rep.n_support_ok += ft.support_ok ? 1 : 0;
        rep.n_new_short_vector += ft.decomposed ? 0 : 1;
        rep.detail.push_back(std::move(ft));
    }
    return rep;
}

nlohmann::json FlawReport::to_json() const {
    nlohmann::json j;
    j["params"] = {{"P", params.P},     {"sigma", params.sigma}, {"Delta", params.Delta},
                   {"t", params.t},     {"k", params.k},         {"d", params.d}};
    j["trials"] = trials;
    j["n_decomposed"] = n_decomposed;
    j["n_in_span"] = n_in_span;
    j["n_support_ok"] = n_support_ok;
    j["n_new_short_vector"] = n_new_short_vector;
    auto& arr = j["detail"] = nlohmann::json::array();
    for (const auto& t : detail) {
        nlohmann::json e;
        e["u"] = vec_to_label(t.u);
        e["y1"] = vec_to_label(t.y1);
        e["y2"] = vec_to_label(t.y2);
        e["coeffs"] = {t.c0, t.c1};
        e["decomposed"] = t.decomposed;
        e["in_span_S"] = t.in_span_S;
        e["support_ok"] = t.support_ok;
        arr.push_back(std::move(e));
    }
    return j;
}

} // namespace qmlab::money
