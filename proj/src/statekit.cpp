#include "qmlab/statekit.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace qmlab {

std::string label_str(const Label& l) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (i) os << ",";
        os << l[i];
    }
    os << ")";
    return os.str();
}

const char* err_name(Err e) {
    switch (e) {
        case Err::InvalidInput: return "InvalidInput";
        case Err::NotBijective: return "NotBijective";
        case Err::InvalidProjector: return "InvalidProjector";
        case Err::ZeroBranch: return "ZeroBranch";
        case Err::DimensionMismatch: return "DimensionMismatch";
        case Err::InvariantBroken: return "InvariantBroken";
        case Err::InvalidPath: return "InvalidPath";
        case Err::NotAnEncodedPoint: return "NotAnEncodedPoint";
        case Err::InvalidParams: return "InvalidParams";
        case Err::SingularBasis: return "SingularBasis";
        case Err::WidthTooNarrow: return "WidthTooNarrow";
        case Err::EmptyCoset: return "EmptyCoset";
        case Err::NotGoodEllipsoid: return "NotGoodEllipsoid";
        case Err::MixedCoset: return "MixedCoset";
        case Err::DegenerateShortSet: return "DegenerateShortSet";
        case Err::RankDeficient: return "RankDeficient";
        case Err::InternalError: return "InternalError";
        case Err::InvalidMixture: return "InvalidMixture";
        case Err::EmptyAudit: return "EmptyAudit";
    }
    return "UnknownError";
}

} // namespace qmlab

namespace qmlab::statekit {

StateVector StateVector::from_entries(std::vector<std::pair<Label, Complex>> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < entries.size(); ++i)
        require(entries[i].first != entries[i - 1].first, Err::InvalidInput,
                "duplicate basis label " + label_str(entries[i].first));
    StateVector s;
    s.basis.reserve(entries.size());
    s.amps.resize(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        s.basis.push_back(std::move(entries[i].first));
        s.amps[static_cast<Eigen::Index>(i)] = entries[i].second;
    }
    return s;
}

StateVector StateVector::normalized() const {
    double n = norm();
    require(n > 0.0, Err::ZeroBranch, "cannot normalize the zero vector");
    StateVector out = *this;
    out.amps /= n;
    return out;
}

int StateVector::find(const Label& l) const {
    auto it = std::lower_bound(basis.begin(), basis.end(), l);
    if (it == basis.end() || *it != l) return -1;
    return static_cast<int>(it - basis.begin());
}

Complex StateVector::amp(const Label& l) const {
    int i = find(l);
    return i < 0 ? Complex(0.0) : amps[i];
}

StateVector StateVector::embedded(const std::vector<Label>& bigger) const {
    StateVector out;
    out.basis = bigger;
    out.amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(bigger.size()));
    for (int i = 0; i < dim(); ++i) {
        auto it = std::lower_bound(bigger.begin(), bigger.end(), basis[i]);
        require(it != bigger.end() && *it == basis[i], Err::InvalidInput,
                "embedding basis does not contain " + label_str(basis[i]));
        out.amps[it - bigger.begin()] = amps[i];
    }
    return out;
}

nlohmann::json StateVector::to_json() const {
    nlohmann::json j;
    j["basis"] = basis;
    auto& a = j["amps"] = nlohmann::json::array();
    for (int i = 0; i < dim(); ++i) a.push_back({amps[i].real(), amps[i].imag()});
    return j;
}

StateVector StateVector::from_json(const nlohmann::json& j) {
    std::vector<std::pair<Label, Complex>> entries;
    const auto& basis = j.at("basis");
    const auto& amps = j.at("amps");
    require(basis.size() == amps.size(), Err::InvalidInput, "basis/amps length mismatch");
    for (std::size_t i = 0; i < basis.size(); ++i)
        entries.push_back({basis[i].get<Label>(),
                           Complex(amps[i][0].get<double>(), amps[i][1].get<double>())});
    return from_entries(std::move(entries));
}

void DensityMatrix::validate(double tol, bool unit_trace) const {
    require(mat.rows() == mat.cols() && mat.rows() == dim(), Err::DimensionMismatch,
            "density matrix shape");
    require((mat - mat.adjoint()).cwiseAbs().maxCoeff() <= tol, Err::InvalidInput,
            "density matrix not Hermitian");
    if (unit_trace)
        require(std::abs(trace() - 1.0) <= tol, Err::InvalidInput, "density matrix trace != 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-9, Err::InvalidInput,
            "density matrix has a negative eigenvalue");
}

StateVector uniform_superposition(const std::vector<Label>& labels) {
    require(!labels.empty(), Err::InvalidInput, "uniform superposition over empty set");
    double a = 1.0 / std::sqrt(static_cast<double>(labels.size()));
    std::vector<std::pair<Label, Complex>> entries;
    entries.reserve(labels.size());
    for (const auto& l : labels) entries.push_back({l, a});
    return StateVector::from_entries(std::move(entries));
}

StateVector apply_bijection(const StateVector& s, const LabelFn& f) {
    std::vector<std::pair<Label, Complex>> entries;
    entries.reserve(s.basis.size());
    for (int i = 0; i < s.dim(); ++i) entries.push_back({f(s.basis[i]), s.amps[i]});
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < entries.size(); ++i)
        require(entries[i].first != entries[i - 1].first, Err::NotBijective,
                "map collides on basis label " + label_str(entries[i].first));
    return StateVector::from_entries(std::move(entries));
}

std::vector<MeasureResult> measure_branches(const StateVector& s, const LabelFn& g) {
    std::map<Label, std::vector<int>> groups;
    for (int i = 0; i < s.dim(); ++i) groups[g(s.basis[i])].push_back(i);
    double total = s.amps.squaredNorm();
    std::vector<MeasureResult> out;
    for (const auto& [outcome, idx] : groups) {
        MeasureResult r;
        r.outcome = outcome;
        std::vector<std::pair<Label, Complex>> entries;
        double mass = 0.0;
        for (int i : idx) {
            mass += std::norm(s.amps[i]);
            entries.push_back({s.basis[i], s.amps[i]});
        }
        r.prob = mass / total;
        if (mass > 0.0) {
            r.post = StateVector::from_entries(std::move(entries));
            r.post.amps /= std::sqrt(mass);
            out.push_back(std::move(r));
        }
    }
    return out;
}

MeasureResult measure_function(const StateVector& s, const LabelFn& g, RngStream& rng) {
    auto branches = measure_branches(s, g);
    std::vector<double> w;
    w.reserve(branches.size());
    for (const auto& b : branches) w.push_back(b.prob);
    return branches[rng.pick_weighted(w)];
}

ProjectResult project_family(const StateVector& s, const std::vector<StateVector>& family,
                             double tol) {
    // orthonormality check over the union support
    for (std::size_t i = 0; i < family.size(); ++i) {
        for (std::size_t j = i; j < family.size(); ++j) {
            Complex ip = inner(family[i], family[j]);
            double want = (i == j) ? 1.0 : 0.0;
            require(std::abs(ip - want) <= tol, Err::InvalidProjector,
                    "projection family is not orthonormal");
        }
    }
    ProjectResult res;
    std::vector<Label> big = s.basis;
    for (const auto& v : family) big = union_basis(big, v.basis);
    StateVector se = s.embedded(big);
    Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(se.amps.size());
    for (const auto& v : family) {
        StateVector ve = v.embedded(big);
        proj += ve.amps.dot(se.amps) * ve.amps;
    }
    double total = se.amps.squaredNorm();
    double mass = proj.squaredNorm();
    res.prob = mass / total;
    if (mass > 1e-300) {
        std::vector<std::pair<Label, Complex>> entries;
        for (std::size_t i = 0; i < big.size(); ++i)
            if (std::norm(proj[static_cast<Eigen::Index>(i)]) > 0.0)
                entries.push_back({big[i], proj[static_cast<Eigen::Index>(i)]});
        StateVector branch = StateVector::from_entries(std::move(entries));
        branch.amps /= std::sqrt(mass);
        res.branch = std::move(branch);
    }
    return res;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    require(a.basis == b.basis, Err::DimensionMismatch, "trace_distance over different bases");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.mat - b.mat, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double state_l2_distance(const StateVector& a, const StateVector& b) {
    require(a.basis == b.basis, Err::DimensionMismatch, "state_l2_distance over different bases");
    return (a.amps - b.amps).norm();
}

DensityMatrix pure_density(const StateVector& s) {
    DensityMatrix d;
    d.basis = s.basis;
    d.mat = s.amps * s.amps.adjoint();
    return d;
}

Complex inner(const StateVector& a, const StateVector& b) {
    Complex acc = 0.0;
    // both bases sorted: merge walk
    std::size_t i = 0, j = 0;
    while (i < a.basis.size() && j < b.basis.size()) {
        if (a.basis[i] < b.basis[j]) {
            ++i;
        } else if (b.basis[j] < a.basis[i]) {
            ++j;
        } else {
            acc += std::conj(a.amps[static_cast<Eigen::Index>(i)]) *
                   b.amps[static_cast<Eigen::Index>(j)];
            ++i;
            ++j;
        }
    }
    return acc;
}

double pure_trace_distance(const StateVector& a, const StateVector& b) {
    double f = std::abs(inner(a.normalized(), b.normalized()));
    if (f > 1.0) f = 1.0;
    return std::sqrt(1.0 - f * f);
}

std::vector<Label> union_basis(const std::vector<Label>& a, const std::vector<Label>& b) {
    std::vector<Label> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace qmlab::statekit
