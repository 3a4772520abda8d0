#include "qmlab/invariant.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>

namespace qmlab::invariant {

using statekit::Complex;

void WalkableInvariant::validate() const {
    require(r > 0 && static_cast<int>(inv_pair.size()) == r, Err::InvalidParams,
            "pairing table must have one entry per permutation index");
    for (int i = 0; i < r; ++i) {
        require(inv_pair[i] >= 0 && inv_pair[i] < r && inv_pair[inv_pair[i]] == i,
                Err::InvalidParams, "pairing is not an involution");
    }
    for (const Label& x : domain) {
        for (int i = 0; i < r; ++i) {
            Label y = sigma(i, x);
            if (inv(y) != inv(x))
                fail(Err::InvariantBroken,
                     "sigma_" + std::to_string(i) + " changes the invariant at " + label_str(x));
            if (sigma(inv_pair[i], y) != x)
                fail(Err::InvariantBroken,
                     "paired permutation does not invert sigma_" + std::to_string(i) + " at " +
                         label_str(x));
        }
    }
}

std::vector<Orbit> compute_orbits(const WalkableInvariant& w) {
    std::set<Label> seen;
    std::vector<Orbit> out;
    for (const Label& x : w.domain) {
        if (seen.count(x)) continue;
        Orbit o = orbit_of(w, x);
        for (const Label& e : o.elements) seen.insert(e);
        out.push_back(std::move(o));
    }
    std::sort(out.begin(), out.end(), [](const Orbit& a, const Orbit& b) { return a.repr < b.repr; });
    return out;
}

Orbit orbit_of(const WalkableInvariant& w, const Label& x) {
    Label y = w.inv(x);
    std::set<Label> elems{x};
    std::vector<Label> frontier{x};
    while (!frontier.empty()) {
        std::vector<Label> next;
        for (const Label& z : frontier) {
            for (int i = 0; i < w.r; ++i) {
                Label zz = w.sigma(i, z);
                if (w.inv(zz) != y)
                    fail(Err::InvariantBroken, "sigma_" + std::to_string(i) +
                                                   " changes the invariant at " + label_str(z));
                if (elems.insert(zz).second) next.push_back(zz);
            }
        }
        frontier = std::move(next);
    }
    Orbit o;
    o.elements.assign(elems.begin(), elems.end());
    o.repr = o.elements.front();
    return o;
}

Eigen::MatrixXd walk_matrix(const WalkableInvariant& w, const std::vector<Label>& subset) {
    const int n = static_cast<int>(subset.size());
    auto idx = [&](const Label& l) {
        auto it = std::lower_bound(subset.begin(), subset.end(), l);
        require(it != subset.end() && *it == l, Err::InternalError,
                "walk subset is not closed under the permutations");
        return static_cast<int>(it - subset.begin());
    };
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int z = 0; z < n; ++z)
        for (int i = 0; i < w.r; ++i) m(idx(w.sigma(i, subset[z])), z) += 1.0 / w.r;
    return m;
}

Eigen::VectorXcd half_walk_apply(const WalkableInvariant& w, const std::vector<Label>& subset,
                                 const Eigen::VectorXcd& v) {
    const int n = static_cast<int>(subset.size());
    require(v.size() == n, Err::DimensionMismatch, "half_walk_apply vector size");
    auto idx = [&](const Label& l) {
        auto it = std::lower_bound(subset.begin(), subset.end(), l);
        require(it != subset.end() && *it == l, Err::InternalError,
                "walk subset is not closed under the permutations");
        return static_cast<int>(it - subset.begin());
    };
    Eigen::VectorXcd mv = Eigen::VectorXcd::Zero(n);
    for (int x = 0; x < n; ++x) {
        Complex acc = 0.0;
        for (int i = 0; i < w.r; ++i) acc += v[idx(w.sigma(w.inv_pair[i], subset[x]))];
        mv[x] = acc / static_cast<double>(w.r);
    }
    return 0.5 * (v + mv);
}

WalkSpectrum walk_spectrum(const WalkableInvariant& w, const Orbit& o) {
    WalkSpectrum s;
    s.matrix = walk_matrix(w, o.elements);
    if (o.elements.size() == 1) {
        s.lambda1 = 1.0;
        s.lambda2 = 0.0;
        s.delta = 1.0;
        return s;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.matrix, Eigen::EigenvaluesOnly);
    std::vector<double> eig(es.eigenvalues().data(), es.eigenvalues().data() + o.elements.size());
    // the top eigenvalue is always +1 (flat vector); lambda2 is the largest
    // remaining magnitude, so a bipartite -1 eigenvalue reports delta = 0
    auto top = std::max_element(eig.begin(), eig.end());
    require(std::fabs(*top - 1.0) <= 1e-10, Err::InternalError,
            "walk matrix lost its unit eigenvalue");
    s.lambda1 = *top;
    eig.erase(top);
    s.lambda2 = 0.0;
    for (double e : eig) s.lambda2 = std::max(s.lambda2, std::fabs(e));
    s.delta = 1.0 - s.lambda2;
    return s;
}

BankNote mint(const WalkableInvariant& w, RngStream& rng) {
    StateVector x = statekit::uniform_superposition(w.domain);
    auto res = statekit::measure_function(x, w.inv, rng);
    return BankNote{res.outcome, res.post};
}

std::vector<Orbit> orbits_in_class(const WalkableInvariant& w, const Label& serial) {
    std::vector<Orbit> out;
    for (auto& o : compute_orbits(w))
        if (w.inv(o.repr) == serial) out.push_back(std::move(o));
    return out;
}

double class_delta(const WalkableInvariant& w, const Label& serial) {
    double l2 = 0.0;
    for (const auto& o : orbits_in_class(w, serial))
        l2 = std::max(l2, walk_spectrum(w, o).lambda2);
    return 1.0 - l2;
}

statekit::ProjectResult verify_exact(const WalkableInvariant& w, const BankNote& note) {
    // support check: measure the invariant and keep the serial branch
    double p1 = 0.0;
    std::optional<StateVector> supported;
    for (auto& b : statekit::measure_branches(note.state, w.inv)) {
        if (b.outcome == note.serial) {
            p1 = b.prob;
            supported = std::move(b.post);
        }
    }
    if (!supported) return {};
    std::vector<StateVector> family;
    for (const auto& o : orbits_in_class(w, note.serial))
        family.push_back(statekit::uniform_superposition(o.elements));
    auto proj = statekit::project_family(*supported, family);
    proj.prob *= p1;
    return proj;
}

JointVerifier::JointVerifier(const WalkableInvariant& w, std::vector<Label> subset)
    : subset_(std::move(subset)), r2_(2 * w.r), n_(static_cast<int>(subset_.size())) {
    auto idx = [&](const Label& l) {
        auto it = std::lower_bound(subset_.begin(), subset_.end(), l);
        require(it != subset_.end() && *it == l, Err::InternalError,
                "verifier subset is not closed under the permutations");
        return static_cast<int>(it - subset_.begin());
    };
    perm_.assign(static_cast<std::size_t>(w.r), std::vector<int>(static_cast<std::size_t>(n_)));
    permInv_ = perm_;
    for (int i = 0; i < w.r; ++i) {
        for (int x = 0; x < n_; ++x) {
            perm_[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] =
                idx(w.sigma(i, subset_[static_cast<std::size_t>(x)]));
            permInv_[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] =
                idx(w.sigma(w.inv_pair[static_cast<std::size_t>(i)],
                            subset_[static_cast<std::size_t>(x)]));
        }
    }
}

Eigen::VectorXcd JointVerifier::embed(const Eigen::VectorXcd& s) const {
    require(s.size() == n_, Err::DimensionMismatch, "money register size");
    Eigen::VectorXcd j(static_cast<Eigen::Index>(r2_) * n_);
    const double a = 1.0 / std::sqrt(static_cast<double>(r2_));
    for (int i = 0; i < r2_; ++i)
        for (int x = 0; x < n_; ++x) j[static_cast<Eigen::Index>(i) * n_ + x] = a * s[x];
    return j;
}

Eigen::VectorXcd JointVerifier::apply_U(const Eigen::VectorXcd& j) const {
    Eigen::VectorXcd out = j;
    const int r = r2_ / 2;
    for (int i = 0; i < r; ++i)
        for (int x = 0; x < n_; ++x)
            out[static_cast<Eigen::Index>(i) * n_ +
                perm_[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)]] =
                j[static_cast<Eigen::Index>(i) * n_ + x];
    return out;
}

Eigen::VectorXcd JointVerifier::apply_U_inverse(const Eigen::VectorXcd& j) const {
    Eigen::VectorXcd out = j;
    const int r = r2_ / 2;
    for (int i = 0; i < r; ++i)
        for (int x = 0; x < n_; ++x)
            out[static_cast<Eigen::Index>(i) * n_ +
                permInv_[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)]] =
                j[static_cast<Eigen::Index>(i) * n_ + x];
    return out;
}

Eigen::VectorXcd JointVerifier::apply_P(const Eigen::VectorXcd& j) const {
    Eigen::VectorXcd out(j.size());
    for (int x = 0; x < n_; ++x) {
        Complex acc = 0.0;
        for (int i = 0; i < r2_; ++i) acc += j[static_cast<Eigen::Index>(i) * n_ + x];
        acc /= static_cast<double>(r2_);
        for (int i = 0; i < r2_; ++i) out[static_cast<Eigen::Index>(i) * n_ + x] = acc;
    }
    return out;
}

Eigen::VectorXcd JointVerifier::extract_money(const Eigen::VectorXcd& j) const {
    Eigen::VectorXcd s(n_);
    const double a = std::sqrt(static_cast<double>(r2_));
    for (int x = 0; x < n_; ++x) s[x] = j[x] * a;
    // the index register must be exactly uniform
    for (int i = 0; i < r2_; ++i)
        for (int x = 0; x < n_; ++x)
            require(std::abs(j[static_cast<Eigen::Index>(i) * n_ + x] - s[x] / a) <= 1e-12,
                    Err::InternalError, "index register left the uniform state");
    return s;
}

namespace {

// Accepted-branch evolution of the repeated-projection verifier, simulated on
// the literal joint space. A projective acceptance leaves the index register
// exactly uniform, so the round's closing U^-1 cancels against the next
// round's U; the final U^-1 is skipped for the same reason (its effect is
// undone by discarding the index register only when the register is uniform,
// which holds on the accepted branch).
struct VerifierRun {
    std::vector<double> round_probs; // t branch probabilities (normalized per round)
    Eigen::VectorXcd final_unnormalized;
};

VerifierRun run_accept_branch(const WalkableInvariant& w, const std::vector<Label>& cls,
                              const Eigen::VectorXcd& start, int t) {
    JointVerifier jv(w, cls);
    VerifierRun run;
    Eigen::VectorXcd joint = jv.embed(start);
    double prev = joint.squaredNorm();
    for (int k = 0; k < t; ++k) {
        joint = jv.apply_P(jv.apply_U(joint));
        double now = joint.squaredNorm();
        run.round_probs.push_back(prev > 0.0 ? now / prev : 0.0);
        prev = now;
    }
    run.final_unnormalized = jv.extract_money(joint);
    return run;
}

std::vector<Label> class_basis(const std::vector<Orbit>& orbits) {
    std::vector<Label> cls;
    for (const auto& o : orbits) cls.insert(cls.end(), o.elements.begin(), o.elements.end());
    std::sort(cls.begin(), cls.end());
    return cls;
}

} // namespace

ApproxResult verify_approx(const WalkableInvariant& w, const BankNote& note, int t,
                           RngStream& rng) {
    require(t >= 1, Err::InvalidParams, "verify_approx needs t >= 1");
    ApproxResult res;

    // support check, as in the exact verifier
    double p1 = 0.0;
    std::optional<StateVector> supported;
    for (auto& b : statekit::measure_branches(note.state, w.inv)) {
        if (b.outcome == note.serial) {
            p1 = b.prob;
            supported = std::move(b.post);
        }
    }
    res.accept_prob = p1;
    bool alive = true;
    if (!supported || p1 <= 0.0) {
        res.accepted = false;
        res.reject_round = 0;
        res.accept_prob = 0.0;
        return res;
    }
    if (rng.real01() >= p1) {
        res.accepted = false;
        res.reject_round = 0;
        alive = false;
    }

    auto orbits = orbits_in_class(w, note.serial);
    auto cls = class_basis(orbits);
    Eigen::VectorXcd start = supported->embedded(cls).amps;
    auto run = run_accept_branch(w, cls, start, t);

    for (int k = 0; k < t; ++k) {
        double p = run.round_probs[static_cast<std::size_t>(k)];
        res.accept_prob *= p;
        if (alive) {
            if (rng.real01() < p) continue;
            res.accepted = false;
            res.reject_round = k + 1;
            alive = false;
        }
    }
    res.accepted = alive;

    std::vector<std::pair<Label, Complex>> entries;
    for (std::size_t i = 0; i < cls.size(); ++i)
        entries.push_back({cls[i], run.final_unnormalized[static_cast<Eigen::Index>(i)]});
    res.accepted_branch_unnormalized = StateVector::from_entries(std::move(entries));
    // fold the support-check branch weight into the unnormalized output
    res.accepted_branch_unnormalized.amps *= std::sqrt(p1);
    if (res.accepted_branch_unnormalized.norm() > 1e-150)
        res.post = res.accepted_branch_unnormalized.normalized();
    return res;
}

ClosenessBound closeness_bound_check(const WalkableInvariant& w, const StateVector& s, int t) {
    StateVector sn = s.normalized();
    Label serial = w.inv(sn.basis.front());
    for (const auto& l : sn.basis)
        require(w.inv(l) == serial, Err::InvalidInput,
                "state must be supported on a single preimage class");

    auto orbits = orbits_in_class(w, serial);
    auto cls = class_basis(orbits);
    Eigen::VectorXcd v = sn.embedded(cls).amps;

    // exact projection V|s>
    Eigen::VectorXcd vs = Eigen::VectorXcd::Zero(v.size());
    for (const auto& o : orbits) {
        StateVector ov = statekit::uniform_superposition(o.elements).embedded(cls);
        vs += ov.amps.dot(v) * ov.amps;
    }

    auto run = run_accept_branch(w, cls, v, t);
    ClosenessBound out;
    out.lhs = (vs - run.final_unnormalized).squaredNorm();
    double delta = class_delta(w, serial);
    out.rhs = (1.0 - vs.squaredNorm()) * std::pow(1.0 - delta / 2.0, 2 * t);
    return out;
}

bool verify_path(const WalkableInvariant& w, const Label& x, const Label& z, const PathWord& p) {
    for (int s : p.steps)
        require(s >= 0 && s < w.r, Err::InvalidPath, "path step index out of range");
    auto walk = [&](Label cur) {
        for (int s : p.steps) cur = w.sigma(s, cur);
        return cur;
    };
    return walk(x) == z || walk(z) == x;
}

std::pair<Label, PathWord> challenger_walk(const WalkableInvariant& w, const Label& x,
                                           RngStream& rng, const PathGameConfig& cfg) {
    Orbit o = orbit_of(w, x);
    double delta = walk_spectrum(w, o).delta;
    std::size_t steps;
    if (delta > 1e-9) {
        steps = static_cast<std::size_t>(std::ceil(cfg.lambda_sec / delta));
    } else {
        // non-mixing orbit: fall back to a walk long relative to the orbit
        steps = static_cast<std::size_t>(cfg.lambda_sec) * o.elements.size();
    }
    PathWord p;
    Label cur = x;
    for (std::size_t k = 0; k < steps; ++k) {
        int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(w.r)));
        p.steps.push_back(i);
        cur = w.sigma(i, cur);
    }
    return {cur, p};
}

bool path_finding_game(const WalkableInvariant& w, PathAdversary& adv, RngStream& rng,
                       const PathGameConfig& cfg) {
    Label x = adv.choose_start(w, rng);
    auto [z, walkWord] = challenger_walk(w, x, rng, cfg);
    (void)walkWord;
    PathWord p = adv.find_path(w, x, z, rng);
    return verify_path(w, x, z, p);
}

namespace {

// Apply the full acceptance operator (support projector then ((I+M)/2)^t) to
// one register of a joint state. The other register is carried along, which is
// exactly the partial-measurement semantics of verifying one note of an
// entangled pair.
StateVector apply_acceptance(const WalkableInvariant& w, const Label& serial, int t,
                             const StateVector& joint, int first_len, int reg) {
    auto orbits = orbits_in_class(w, serial);
    auto cls = class_basis(orbits);

    auto split = [&](const Label& l) {
        Label a(l.begin(), l.begin() + first_len);
        Label b(l.begin() + first_len, l.end());
        return std::pair<Label, Label>(std::move(a), std::move(b));
    };

    std::map<Label, std::vector<std::pair<Label, Complex>>> groups; // other -> (mine, amp)
    for (int i = 0; i < joint.dim(); ++i) {
        auto [a, b] = split(joint.basis[i]);
        Label mine = (reg == 0) ? a : b;
        Label other = (reg == 0) ? b : a;
        groups[other].push_back({std::move(mine), joint.amps[i]});
    }

    std::vector<std::pair<Label, Complex>> outEntries;
    for (auto& [other, part] : groups) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(cls.size()));
        for (auto& [mine, amp] : part) {
            if (w.inv(mine) != serial) continue; // support projector
            auto it = std::lower_bound(cls.begin(), cls.end(), mine);
            v[it - cls.begin()] += amp;
        }
        for (int k = 0; k < t; ++k) v = half_walk_apply(w, cls, v);
        for (std::size_t i = 0; i < cls.size(); ++i) {
            Complex a = v[static_cast<Eigen::Index>(i)];
            if (std::norm(a) == 0.0) continue;
            Label full = (reg == 0) ? concat(cls[i], other) : concat(other, cls[i]);
            outEntries.push_back({std::move(full), a});
        }
    }
    if (outEntries.empty()) {
        StateVector zero;
        zero.amps = Eigen::VectorXcd::Zero(0);
        return zero;
    }
    return StateVector::from_entries(std::move(outEntries));
}

void check_submission(const LightningSubmission& sub) {
    require(sub.first_len > 0, Err::InvalidInput, "joint state needs a register split");
    require(sub.joint.dim() > 0, Err::InvalidInput, "empty joint state");
    std::size_t len = sub.joint.basis.front().size();
    require(len > static_cast<std::size_t>(sub.first_len), Err::InvalidInput,
            "joint labels shorter than the register split");
    for (const auto& l : sub.joint.basis)
        require(l.size() == len, Err::InvalidInput, "ragged joint labels");
}

} // namespace

double lightning_win_prob(const WalkableInvariant& w, const LightningSubmission& sub, int t) {
    check_submission(sub);
    StateVector cur = sub.joint.normalized();
    cur = apply_acceptance(w, sub.serial, t, cur, sub.first_len, 0);
    if (cur.dim() == 0) return 0.0;
    cur = apply_acceptance(w, sub.serial, t, cur, sub.first_len, 1);
    if (cur.dim() == 0) return 0.0;
    return cur.amps.squaredNorm();
}

bool lightning_game(const WalkableInvariant& w, const LightningSubmission& sub, int t,
                    RngStream& rng) {
    check_submission(sub);
    StateVector cur = sub.joint.normalized();
    StateVector b1 = apply_acceptance(w, sub.serial, t, cur, sub.first_len, 0);
    double p1 = b1.dim() == 0 ? 0.0 : b1.amps.squaredNorm();
    if (rng.real01() >= p1) return false;
    b1.amps /= std::sqrt(p1);
    StateVector b2 = apply_acceptance(w, sub.serial, t, b1, sub.first_len, 1);
    double p2 = b2.dim() == 0 ? 0.0 : b2.amps.squaredNorm();
    return rng.real01() < p2;
}

nlohmann::json WalkableInvariant::to_json() const {
    nlohmann::json j;
    j["domain_size"] = domain.size();
    std::vector<std::int64_t> invTable;
    for (const auto& x : domain) {
        require(x.size() == 1, Err::InvalidInput, "table form needs single-int labels");
        Label y = inv(x);
        require(y.size() == 1, Err::InvalidInput, "table form needs single-int invariant values");
        invTable.push_back(y[0]);
    }
    j["invariant_table"] = invTable;
    auto& gens = j["generators"] = nlohmann::json::array();
    for (int i = 0; i < r; ++i) {
        std::vector<std::int64_t> perm;
        for (const auto& x : domain) perm.push_back(sigma(i, x)[0]);
        gens.push_back(perm);
    }
    j["pairing"] = inv_pair;
    return j;
}

WalkableInvariant WalkableInvariant::from_json(const nlohmann::json& j) {
    const auto n = j.at("domain_size").get<std::size_t>();
    auto invTable = std::make_shared<std::vector<std::int64_t>>(
        j.at("invariant_table").get<std::vector<std::int64_t>>());
    require(invTable->size() == n, Err::InvalidInput, "invariant table size mismatch");
    auto gens = std::make_shared<std::vector<std::vector<std::int64_t>>>();
    for (const auto& g : j.at("generators")) {
        auto perm = g.get<std::vector<std::int64_t>>();
        require(perm.size() == n, Err::InvalidInput, "generator permutation size mismatch");
        gens->push_back(std::move(perm));
    }
    WalkableInvariant w;
    for (std::size_t i = 0; i < n; ++i) w.domain.push_back(single(static_cast<std::int64_t>(i)));
    w.r = static_cast<int>(gens->size());
    w.inv_pair = j.at("pairing").get<std::vector<int>>();
    w.inv = [invTable](const Label& x) { return single((*invTable)[static_cast<std::size_t>(x[0])]); };
    w.sigma = [gens](int i, const Label& x) {
        return single((*gens)[static_cast<std::size_t>(i)][static_cast<std::size_t>(x[0])]);
    };
    w.validate();
    return w;
}

} // namespace qmlab::invariant
