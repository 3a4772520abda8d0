#pragma once

#include "qmlab/statekit.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace qmlab::invariant {

using statekit::StateVector;

// A finite set X, an invariant I : X -> Y, and a family of permutations
// sigma_i that preserve I and come in inverse pairs. Everything is enumerable
// so the scheme's measurements can be simulated exactly.
struct WalkableInvariant {
    std::vector<Label> domain; // sorted
    std::function<Label(const Label&)> inv;
    int r = 0; // number of permutation indices
    std::function<Label(int, const Label&)> sigma;
    std::vector<int> inv_pair; // sigma[inv_pair[i]] == sigma[i]^-1

    // full-enumeration check of the structural invariants; throws
    // InvariantBroken with a witness (i, x) on the first violation
    void validate() const;

    nlohmann::json to_json() const; // table form, single-int labels only
    static WalkableInvariant from_json(const nlohmann::json& j);
};

struct Orbit {
    std::vector<Label> elements; // sorted
    Label repr;                  // minimum label
};

struct WalkSpectrum {
    Eigen::MatrixXd matrix; // M_O, row index = position in orbit.elements
    double lambda1 = 1.0;
    double lambda2 = 0.0; // second-largest eigenvalue by absolute value
    double delta = 1.0;   // 1 - lambda2
};

struct BankNote {
    Label serial;
    StateVector state;
};

struct PathWord {
    std::vector<int> steps;
};

std::vector<Orbit> compute_orbits(const WalkableInvariant& w);
// BFS closure of a single starting point
Orbit orbit_of(const WalkableInvariant& w, const Label& x);

WalkSpectrum walk_spectrum(const WalkableInvariant& w, const Orbit& o);

BankNote mint(const WalkableInvariant& w, RngStream& rng);

// support check on P_y followed by the projection onto per-orbit-uniform
// states; prob is the joint acceptance probability
statekit::ProjectResult verify_exact(const WalkableInvariant& w, const BankNote& note);

struct ApproxResult {
    bool accepted = false;
    int reject_round = -1; // -1 when accepted; 0 = support check, 1..t = loop round
    double accept_prob = 0.0; // exact probability that every round accepts
    std::optional<StateVector> post; // normalized accepted output (when nonzero)
    StateVector accepted_branch_unnormalized; // for closeness-bound comparisons
};

// Repeated-projection verifier: index register holding 2r values, the
// controlled-walk unitary U, and t rounds of projecting the index register
// back onto the uniform state. accepted is sampled from rng with the exact
// per-round branch probabilities; accept_prob is the full product.
ApproxResult verify_approx(const WalkableInvariant& w, const BankNote& note, int t,
                           RngStream& rng);

struct ClosenessBound {
    double lhs = 0.0; // || V|s> - |s'> ||^2, s' the unnormalized accepted branch
    double rhs = 0.0; // (1 - ||V|s>||^2) * (1 - delta/2)^(2t)
};

ClosenessBound closeness_bound_check(const WalkableInvariant& w, const StateVector& s, int t);

bool verify_path(const WalkableInvariant& w, const Label& x, const Label& z, const PathWord& p);

struct PathAdversary {
    virtual ~PathAdversary() = default;
    virtual Label choose_start(const WalkableInvariant& w, RngStream& rng) = 0;
    virtual PathWord find_path(const WalkableInvariant& w, const Label& x, const Label& z,
                               RngStream& rng) = 0;
};

struct PathGameConfig {
    double lambda_sec = 40.0; // challenger walk length = ceil(lambda_sec / delta)
};

bool path_finding_game(const WalkableInvariant& w, PathAdversary& adv, RngStream& rng,
                       const PathGameConfig& cfg = {});
// the challenger's random walk, exposed for white-box adversaries in tests
std::pair<Label, PathWord> challenger_walk(const WalkableInvariant& w, const Label& x,
                                           RngStream& rng, const PathGameConfig& cfg = {});

struct LightningSubmission {
    Label serial;
    StateVector joint; // labels are concat(x1, x2)
    int first_len = 0; // label length of the first register
};

bool lightning_game(const WalkableInvariant& w, const LightningSubmission& sub, int t,
                    RngStream& rng);
// exact probability that both registers pass the t-round verifier
double lightning_win_prob(const WalkableInvariant& w, const LightningSubmission& sub, int t);

// --- building blocks shared with tests ---

// averaged walk operator M restricted to a sorted label subset (closed under
// every sigma_i, or an InternalError is raised)
Eigen::MatrixXd walk_matrix(const WalkableInvariant& w, const std::vector<Label>& subset);
// one application of the accepted-round operator (I + M)/2 on the subset;
// fast path, cross-validated against JointVerifier in the tests
Eigen::VectorXcd half_walk_apply(const WalkableInvariant& w, const std::vector<Label>& subset,
                                 const Eigen::VectorXcd& v);

// Literal joint simulation of the verifier circuit: an index register over
// 2r values (the walk permutations plus identity padding) tensored with the
// money register restricted to a closed label subset.
class JointVerifier {
public:
    JointVerifier(const WalkableInvariant& w, std::vector<Label> subset);

    int index_dim() const { return r2_; }
    int money_dim() const { return n_; }

    Eigen::VectorXcd embed(const Eigen::VectorXcd& s) const; // |uniform> (x) |s>
    Eigen::VectorXcd apply_U(const Eigen::VectorXcd& j) const;
    Eigen::VectorXcd apply_U_inverse(const Eigen::VectorXcd& j) const;
    Eigen::VectorXcd apply_P(const Eigen::VectorXcd& j) const;
    // money-register content of a state in the image of P; the index register
    // is exactly uniform there, which is asserted
    Eigen::VectorXcd extract_money(const Eigen::VectorXcd& j) const;

private:
    std::vector<Label> subset_;
    int r2_ = 0;
    int n_ = 0;
    std::vector<std::vector<int>> perm_;    // forward index maps per generator
    std::vector<std::vector<int>> permInv_; // inverse maps
};
// orbits contained in the preimage set of the given serial
std::vector<Orbit> orbits_in_class(const WalkableInvariant& w, const Label& serial);
// max orbit-level lambda2 over the serial class; delta = 1 - that
double class_delta(const WalkableInvariant& w, const Label& serial);

} // namespace qmlab::invariant
