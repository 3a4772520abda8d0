#pragma once

#include "qmlab/errors.hpp"
#include "qmlab/label.hpp"
#include "qmlab/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <complex>
#include <functional>
#include <optional>
#include <vector>

namespace qmlab::statekit {

using Complex = std::complex<double>;
using LabelFn = std::function<Label(const Label&)>;

constexpr double kDefaultTol = 1e-10;

// Pure state over an explicitly enumerated classical basis. The basis is kept
// sorted (lexicographic label order) so states over the same support compare
// index-by-index. Unnormalized states are first-class: post-measurement
// branches keep their branch weight until the caller renormalizes.
struct StateVector {
    std::vector<Label> basis;
    Eigen::VectorXcd amps;

    static StateVector from_entries(std::vector<std::pair<Label, Complex>> entries);
    static StateVector basis_state(const Label& l) { return from_entries({{l, 1.0}}); }

    int dim() const { return static_cast<int>(basis.size()); }
    double norm() const { return amps.norm(); }
    StateVector normalized() const;
    // index of label in the basis, -1 if absent
    int find(const Label& l) const;
    Complex amp(const Label& l) const;
    // same state embedded in a larger (sorted, distinct) basis
    StateVector embedded(const std::vector<Label>& bigger) const;

    nlohmann::json to_json() const;
    static StateVector from_json(const nlohmann::json& j);
};

struct DensityMatrix {
    std::vector<Label> basis;
    Eigen::MatrixXcd mat;

    int dim() const { return static_cast<int>(basis.size()); }
    double trace() const { return mat.trace().real(); }
    // Hermiticity / trace / PSD checks used by tests and channel outputs
    void validate(double tol = kDefaultTol, bool unit_trace = true) const;
};

struct MeasureResult {
    Label outcome;
    double prob = 0.0;
    StateVector post; // renormalized restriction to the preimage of outcome
};

struct ProjectResult {
    double prob = 0.0;
    std::optional<StateVector> branch; // normalized; absent on a zero branch

    const StateVector& post() const {
        if (!branch) fail(Err::ZeroBranch, "projection branch has zero probability");
        return *branch;
    }
};

StateVector uniform_superposition(const std::vector<Label>& labels);

StateVector apply_bijection(const StateVector& s, const LabelFn& f);

MeasureResult measure_function(const StateVector& s, const LabelFn& g, RngStream& rng);
// deterministic enumeration of every measurement branch, sorted by outcome
std::vector<MeasureResult> measure_branches(const StateVector& s, const LabelFn& g);

ProjectResult project_family(const StateVector& s, const std::vector<StateVector>& family,
                             double tol = kDefaultTol);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double state_l2_distance(const StateVector& a, const StateVector& b);

DensityMatrix pure_density(const StateVector& s);
// overlap <a|b> after aligning supports
Complex inner(const StateVector& a, const StateVector& b);
// trace distance between two pure states, sqrt(1 - |<a|b>|^2)
double pure_trace_distance(const StateVector& a, const StateVector& b);

std::vector<Label> union_basis(const std::vector<Label>& a, const std::vector<Label>& b);

} // namespace qmlab::statekit
