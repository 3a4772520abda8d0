#include "qmlab/invariant.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace qmlab;
using namespace qmlab::invariant;
using statekit::Complex;
using statekit::StateVector;

namespace {

StateVector random_class_state(const std::vector<Label>& cls, RngStream& rng) {
    std::vector<std::pair<Label, Complex>> entries;
    for (const auto& l : cls) entries.push_back({l, Complex(rng.gauss(), rng.gauss())});
    return StateVector::from_entries(std::move(entries)).normalized();
}

// independent oracle for the verifier acceptance probability: decompose in the
// eigenbasis of the restricted walk matrix and sum |alpha|^2 ((1+l)/2)^(2t)
double acceptance_oracle(const WalkableInvariant& w, const std::vector<Label>& cls,
                         const StateVector& s, int t) {
    Eigen::MatrixXd M = walk_matrix(w, cls);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    Eigen::VectorXcd v = s.embedded(cls).amps;
    double acc = 0.0;
    for (int k = 0; k < M.rows(); ++k) {
        Eigen::VectorXcd evec = es.eigenvectors().col(k).cast<Complex>();
        double coef = std::norm(evec.dot(v));
        acc += coef * std::pow((1.0 + es.eigenvalues()[k]) / 2.0, 2 * t);
    }
    return acc;
}

} // namespace

TEST_CASE("compute_orbits partitions the domain") {
    SUBCASE("identity generators give singleton orbits") {
        WalkableInvariant w = fixtures::cycle(5, {0});
        auto orbits = compute_orbits(w);
        CHECK(orbits.size() == 5);
        for (const auto& o : orbits) CHECK(o.elements.size() == 1);
    }
    SUBCASE("full cycle is one orbit") {
        auto orbits = compute_orbits(fixtures::cycle(6, {1}));
        REQUIRE(orbits.size() == 1);
        CHECK(orbits[0].elements.size() == 6);
        CHECK(orbits[0].repr == single(0));
    }
    SUBCASE("step-2 walk with parity invariant splits evens and odds") {
        auto orbits = compute_orbits(fixtures::cycle(6, {2}, 2));
        REQUIRE(orbits.size() == 2);
        CHECK(orbits[0].elements == std::vector<Label>{single(0), single(2), single(4)});
        CHECK(orbits[1].elements == std::vector<Label>{single(1), single(3), single(5)});
    }
    SUBCASE("invariant violation is reported with a witness") {
        WalkableInvariant w = fixtures::cycle(6, {1}, 2); // +1 step breaks parity
        CHECK_THROWS_WITH_AS(compute_orbits(w), doctest::Contains("InvariantBroken"), Error);
    }
    SUBCASE("partition is stable under generator relabeling") {
        auto a = compute_orbits(fixtures::cycle(12, {2, 3}));
        auto b = compute_orbits(fixtures::cycle(12, {3, 2}));
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].elements == b[i].elements);
    }
}

TEST_CASE("walk_spectrum") {
    SUBCASE("singleton orbit") {
        auto w = fixtures::cycle(3, {0});
        auto orbits = compute_orbits(w);
        auto s = walk_spectrum(w, orbits[0]);
        CHECK(s.lambda2 == 0.0);
        CHECK(s.delta == 1.0);
    }
    SUBCASE("even cycle with +/-1 steps is bipartite: the -1 eigenvalue dominates") {
        auto w = fixtures::cycle(6, {1});
        auto s = walk_spectrum(w, compute_orbits(w)[0]);
        CHECK(s.lambda1 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s.lambda2 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(s.delta == doctest::Approx(0.0).epsilon(1e-9));
        // rows sum to one and the matrix is symmetric
        for (int i = 0; i < 6; ++i) CHECK(s.matrix.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((s.matrix - s.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("lazy 6-cycle mixes with lambda2 = (1 + cos(pi/3))/2") {
        auto w = fixtures::cycle(6, {0, 1});
        auto s = walk_spectrum(w, compute_orbits(w)[0]);
        CHECK(s.lambda2 == doctest::Approx(0.75).epsilon(1e-9));
        CHECK(s.delta == doctest::Approx(0.25).epsilon(1e-9));
        // closed form: averages of cos(2 pi k step / 6) over the step set
        auto eig = fixtures::cycle_eigenvalues(6, {0, 1});
        double second = 0.0;
        for (double e : eig)
            if (e < 1.0 - 1e-9) second = std::max(second, std::fabs(e));
        CHECK(s.lambda2 == doctest::Approx(second).epsilon(1e-9));
    }
    SUBCASE("bipartite swap pair flags delta = 0") {
        auto w = fixtures::bipartite_pair();
        auto s = walk_spectrum(w, compute_orbits(w)[0]);
        CHECK(s.lambda2 == doctest::Approx(1.0).epsilon(1e-12)); // eigenvalue -1 in absolute value
        CHECK(s.delta == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("eigenvalues stay inside [-1, 1] and the top eigenspace is the flat vector") {
        auto w = fixtures::cycle(7, {1, 2});
        auto orbit = compute_orbits(w)[0];
        Eigen::MatrixXd M = walk_matrix(w, orbit.elements);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        CHECK(es.eigenvalues().minCoeff() >= -1.0 - 1e-12);
        CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
        int ones = 0;
        for (int k = 0; k < 7; ++k)
            if (std::fabs(es.eigenvalues()[k] - 1.0) < 1e-10) ++ones;
        CHECK(ones == 1); // connected, non-bipartite
    }
}

TEST_CASE("mint") {
    RngStream rng(42);
    SUBCASE("injective invariant collapses to a classical point") {
        WalkableInvariant w = fixtures::cycle(5, {0}, 5);
        auto note = mint(w, rng);
        CHECK(note.state.dim() == 1);
        CHECK(note.state.basis[0] == note.serial);
    }
    SUBCASE("constant invariant keeps the full superposition") {
        WalkableInvariant w = fixtures::cycle(6, {1});
        auto note = mint(w, rng);
        CHECK(note.serial == single(0));
        CHECK(note.state.dim() == 6);
    }
    SUBCASE("parity invariant: two branches of probability 1/2, three labels each") {
        WalkableInvariant w = fixtures::cycle(6, {2}, 2);
        auto branches =
            statekit::measure_branches(statekit::uniform_superposition(w.domain), w.inv);
        REQUIRE(branches.size() == 2);
        for (const auto& b : branches) {
            CHECK(b.prob == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(b.post.dim() == 3);
        }
    }
}

TEST_CASE("verify_exact") {
    RngStream rng(7);
    WalkableInvariant w = fixtures::cycle(6, {2}, 2);
    SUBCASE("honest notes verify with certainty") {
        auto note = mint(w, rng);
        auto res = verify_exact(w, note);
        CHECK(res.prob == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(statekit::state_l2_distance(res.post().embedded(note.state.basis),
                                          note.state.normalized()) < 1e-10);
    }
    SUBCASE("classical point in an orbit of size 3 accepts with probability 1/3") {
        BankNote fake{single(0), StateVector::basis_state(single(2))};
        auto res = verify_exact(w, fake);
        CHECK(res.prob == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    }
    SUBCASE("unequal weights across orbits still verify") {
        WalkableInvariant w2 = fixtures::cycle(12, {2}, 2); // two orbits, same invariant? no:
        // parity invariant gives different serials per orbit; use a constant
        // invariant with two orbits instead
        WalkableInvariant w3 = fixtures::cycle(12, {2}, 1);
        auto orbits = compute_orbits(w3);
        REQUIRE(orbits.size() == 2);
        std::vector<std::pair<Label, Complex>> entries;
        for (const auto& l : orbits[0].elements)
            entries.push_back({l, Complex(0.9 / std::sqrt(6.0), 0.0)});
        for (const auto& l : orbits[1].elements)
            entries.push_back({l, Complex(std::sqrt(1.0 - 0.81) / std::sqrt(6.0), 0.0)});
        BankNote note{single(0), StateVector::from_entries(std::move(entries))};
        auto res = verify_exact(w3, note);
        CHECK(res.prob == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("support outside the serial class is cut before projecting") {
        BankNote wrong{single(1), StateVector::basis_state(single(2))};
        auto res = verify_exact(w, wrong);
        CHECK(res.prob == doctest::Approx(0.0));
        CHECK(!res.branch.has_value());
    }
}

TEST_CASE("joint verifier eigen-identity: one accepted round scales by (1+l)/2") {
    for (auto steps : {std::vector<std::int64_t>{1}, std::vector<std::int64_t>{1, 2}}) {
        WalkableInvariant w = fixtures::cycle(6, steps);
        auto cls = compute_orbits(w)[0].elements;
        JointVerifier jv(w, cls);
        Eigen::MatrixXd M = walk_matrix(w, cls);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        for (int k = 0; k < M.rows(); ++k) {
            Eigen::VectorXcd psi = es.eigenvectors().col(k).cast<Complex>();
            double ell = es.eigenvalues()[k];
            Eigen::VectorXcd joint = jv.embed(psi);
            Eigen::VectorXcd after = jv.apply_P(jv.apply_U(joint));
            CHECK((after - 0.5 * (1.0 + ell) * joint).norm() <= 1e-10);
        }
    }
}

TEST_CASE("fast half-walk operator matches the literal joint circuit") {
    WalkableInvariant w = fixtures::cycle(9, {1, 2});
    auto cls = compute_orbits(w)[0].elements;
    JointVerifier jv(w, cls);
    RngStream rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto trng = rng.child(static_cast<std::uint64_t>(trial));
        auto s = random_class_state(cls, trng);
        Eigen::VectorXcd viaJoint = jv.extract_money(jv.apply_P(jv.apply_U(jv.embed(s.amps))));
        Eigen::VectorXcd viaHalf = half_walk_apply(w, cls, s.amps);
        CHECK((viaJoint - viaHalf).norm() < 1e-12);
    }
}

TEST_CASE("verify_approx") {
    WalkableInvariant w = fixtures::cycle(6, {1});
    auto cls = compute_orbits(w)[0].elements;

    SUBCASE("honest note accepts with probability one for any round count") {
        RngStream rng(1);
        auto note = mint(w, rng);
        for (int t : {1, 5, 20}) {
            auto res = verify_approx(w, note, t, rng);
            CHECK(res.accept_prob == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(res.accepted);
        }
    }
    SUBCASE("classical point acceptance matches the spectral closed form") {
        RngStream rng(2);
        BankNote fake{single(0), StateVector::basis_state(single(3))};
        auto eig = fixtures::cycle_eigenvalues(6, {1});
        for (int t : {1, 3, 20}) {
            double closed = 0.0;
            for (double l : eig) closed += (1.0 / 6.0) * std::pow((1.0 + l) / 2.0, 2 * t);
            auto res = verify_approx(w, fake, t, rng);
            CHECK(res.accept_prob == doctest::Approx(closed).epsilon(1e-9));
        }
    }
    SUBCASE("opposite-sign eigenvector rejects in one round") {
        // the alternating vector on an even cycle has eigenvalue -1
        std::vector<std::pair<Label, Complex>> entries;
        for (std::int64_t i = 0; i < 6; ++i)
            entries.push_back({single(i), Complex((i % 2 ? -1.0 : 1.0) / std::sqrt(6.0), 0.0)});
        BankNote fake{single(0), StateVector::from_entries(std::move(entries))};
        RngStream rng(3);
        auto res = verify_approx(w, fake, 1, rng);
        CHECK(res.accept_prob == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(!res.accepted);
        CHECK(res.reject_round >= 0);
    }
    SUBCASE("support check precedes the projection loop") {
        WalkableInvariant wp = fixtures::cycle(6, {2}, 2);
        BankNote wrong{single(0), StateVector::basis_state(single(1))};
        RngStream rng(4);
        auto res = verify_approx(wp, wrong, 3, rng);
        CHECK(res.accept_prob == 0.0);
        CHECK(res.reject_round == 0);
    }
    SUBCASE("acceptance probability equals the eigen-decomposition oracle") {
        RngStream rng(6);
        for (int trial = 0; trial < 5; ++trial) {
            auto trng = rng.child(static_cast<std::uint64_t>(trial));
            auto s = random_class_state(cls, trng);
            BankNote note{single(0), s};
            auto res = verify_approx(w, note, 4, trng);
            CHECK(res.accept_prob ==
                  doctest::Approx(acceptance_oracle(w, cls, s, 4)).epsilon(1e-9));
        }
    }
    SUBCASE("exact and approximate acceptance agree within (1 - delta/2)^(2t)") {
        RngStream rng(12);
        double delta = class_delta(w, single(0));
        for (int t : {1, 5, 20}) {
            for (int trial = 0; trial < 10; ++trial) {
                auto trng = rng.child(static_cast<std::uint64_t>(100 * t + trial));
                auto s = random_class_state(cls, trng);
                BankNote note{single(0), s};
                double exact = verify_exact(w, note).prob;
                auto res = verify_approx(w, note, t, trng);
                CHECK(std::fabs(res.accept_prob - exact) <=
                      std::pow(1.0 - delta / 2.0, 2 * t) + 1e-9);
            }
        }
    }
}

TEST_CASE("closeness bound") {
    // lazy cycle: the identity pair keeps every eigenvalue nonnegative, so the
    // second-largest eigenvalue is reached by an actual eigenvector and the
    // bound is tight there
    WalkableInvariant w = fixtures::cycle(6, {0, 1});
    auto cls = compute_orbits(w)[0].elements;

    SUBCASE("states already flat over the orbit have zero residual") {
        auto bound = closeness_bound_check(w, statekit::uniform_superposition(cls), 3);
        CHECK(bound.lhs <= 1e-12);
    }
    SUBCASE("pure second-eigenvector states hit the bound exactly") {
        Eigen::MatrixXd M = walk_matrix(w, cls);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        double lambda2 = 1.0 - class_delta(w, single(0));
        CHECK(lambda2 == doctest::Approx(0.75).epsilon(1e-10));
        int pick = -1;
        for (int k = 0; k < M.rows(); ++k)
            if (std::fabs(es.eigenvalues()[k] - lambda2) < 1e-9) pick = k;
        REQUIRE(pick >= 0);
        std::vector<std::pair<Label, Complex>> entries;
        for (int i = 0; i < 6; ++i)
            entries.push_back({cls[static_cast<std::size_t>(i)],
                               Complex(es.eigenvectors()(i, pick), 0.0)});
        auto s = StateVector::from_entries(std::move(entries));
        for (int t : {1, 5, 10}) {
            auto bound = closeness_bound_check(w, s, t);
            CHECK(bound.lhs ==
                  doctest::Approx(std::pow((1.0 + lambda2) / 2.0, 2 * t)).epsilon(1e-9));
            // (1 + lambda2)/2 equals 1 - delta/2, so lhs meets rhs exactly
            CHECK(bound.lhs == doctest::Approx(bound.rhs).epsilon(1e-9));
            CHECK(bound.lhs <= bound.rhs + 1e-9);
        }
    }
    SUBCASE("random states satisfy the bound, bipartite walks included") {
        RngStream rng(31);
        for (const auto& wf : {fixtures::cycle(6, {0, 1}), fixtures::cycle(6, {1})}) {
            auto clsF = compute_orbits(wf)[0].elements;
            for (int t : {1, 5, 20}) {
                for (int trial = 0; trial < 20; ++trial) {
                    auto trng = rng.child(static_cast<std::uint64_t>(1000 * t + trial));
                    auto bound = closeness_bound_check(wf, random_class_state(clsF, trng), t);
                    CHECK(bound.lhs <= bound.rhs + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("verify_path") {
    WalkableInvariant w = fixtures::cycle(6, {1});
    CHECK(verify_path(w, single(2), single(2), PathWord{}));
    CHECK(verify_path(w, single(2), single(3), PathWord{{0}})); // +1 step
    CHECK(!verify_path(w, single(2), single(5), PathWord{{0}}));
    // "between": a path from z to x also counts
    CHECK(verify_path(w, single(3), single(2), PathWord{{0}}));
    CHECK_THROWS_WITH_AS(verify_path(w, single(0), single(1), PathWord{{9}}),
                         doctest::Contains("InvalidPath"), Error);
}

namespace {

struct ReplayAdversary : PathAdversary {
    // white-box test double: replays the challenger's walk from a forked stream
    Label choose_start(const WalkableInvariant&, RngStream&) override { return single(0); }
    PathWord find_path(const WalkableInvariant& w, const Label& x, const Label&,
                       RngStream& rng) override {
        auto [z, word] = challenger_walk(w, x, rng, {});
        (void)z;
        return word;
    }
};

struct EmptyAdversary : PathAdversary {
    Label choose_start(const WalkableInvariant&, RngStream&) override { return single(0); }
    PathWord find_path(const WalkableInvariant&, const Label&, const Label&, RngStream&) override {
        return {};
    }
};

struct GuessAdversary : PathAdversary {
    Label choose_start(const WalkableInvariant&, RngStream&) override { return single(0); }
    PathWord find_path(const WalkableInvariant& w, const Label&, const Label&,
                       RngStream& rng) override {
        return PathWord{{static_cast<int>(rng.below(static_cast<std::uint64_t>(w.r)))}};
    }
};

} // namespace

TEST_CASE("path finding game harness") {
    WalkableInvariant w = fixtures::cycle(6, {1});
    SUBCASE("a replaying adversary wins") {
        // fork the stream so the adversary sees the exact challenger draws
        ReplayAdversary adv;
        int wins = 0;
        for (int i = 0; i < 20; ++i) {
            RngStream rng(1000 + i);
            RngStream replay = rng; // same stream state
            Label x = adv.choose_start(w, rng);
            auto [z, word] = challenger_walk(w, x, rng, {});
            (void)word;
            Label x2 = adv.choose_start(w, replay);
            auto [z2, word2] = challenger_walk(w, x2, replay, {});
            CHECK(z == z2);
            wins += verify_path(w, x, z, word2) ? 1 : 0;
        }
        CHECK(wins == 20);
    }
    SUBCASE("empty-path adversary wins exactly when the walk returns home") {
        // lazy cycle so the challenger walk actually mixes to uniform
        WalkableInvariant wl = fixtures::cycle(6, {0, 1});
        EmptyAdversary adv;
        int wins = 0;
        const int trials = 400;
        for (int i = 0; i < trials; ++i) {
            RngStream rng(777 + i);
            wins += path_finding_game(wl, adv, rng) ? 1 : 0;
        }
        double rate = static_cast<double>(wins) / trials;
        double sd = std::sqrt((1.0 / 6.0) * (5.0 / 6.0) / trials);
        CHECK(std::fabs(rate - 1.0 / 6.0) <= 3.0 * sd);
    }
    SUBCASE("bipartite walks do not mix: the endpoint keeps the start parity") {
        // documented failure mode of a non-mixing instance: with the plain
        // +/-1 steps on an even cycle the challenger endpoint stays on one
        // parity class, so the empty path wins 1/3 of the time instead of 1/6
        EmptyAdversary adv;
        int wins = 0;
        const int trials = 400;
        for (int i = 0; i < trials; ++i) {
            RngStream rng(777 + i);
            wins += path_finding_game(w, adv, rng) ? 1 : 0;
        }
        double rate = static_cast<double>(wins) / trials;
        double sd = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / trials);
        CHECK(std::fabs(rate - 1.0 / 3.0) <= 3.0 * sd);
    }
    SUBCASE("single-step guesses on the lazy cycle win about 1/4") {
        // half the guessed indices are identity steps (win iff z = x, 1/6),
        // half are +/-1 steps (win iff |z - x| = 1, 2/6)
        WalkableInvariant wl = fixtures::cycle(6, {0, 1});
        GuessAdversary adv;
        int wins = 0;
        const int trials = 400;
        for (int i = 0; i < trials; ++i) {
            RngStream rng(31337 + i);
            wins += path_finding_game(wl, adv, rng) ? 1 : 0;
        }
        double expect = 0.25;
        double rate = static_cast<double>(wins) / trials;
        CHECK(std::fabs(rate - expect) <= 3.0 * std::sqrt(expect * (1.0 - expect) / trials));
    }
}

TEST_CASE("lightning game harness") {
    WalkableInvariant w = fixtures::cycle(6, {1});
    auto cls = compute_orbits(w)[0].elements;
    auto honest = statekit::uniform_superposition(cls);

    auto product = [&](const StateVector& a, const StateVector& b) {
        std::vector<std::pair<Label, Complex>> entries;
        for (int i = 0; i < a.dim(); ++i)
            for (int j = 0; j < b.dim(); ++j)
                entries.push_back({concat(a.basis[static_cast<std::size_t>(i)],
                                          b.basis[static_cast<std::size_t>(j)]),
                                   a.amps[i] * b.amps[j]});
        return StateVector::from_entries(std::move(entries));
    };

    SUBCASE("two honest copies win with certainty") {
        LightningSubmission sub{single(0), product(honest, honest), 1};
        CHECK(lightning_win_prob(w, sub, 10) == doctest::Approx(1.0).epsilon(1e-9));
        RngStream rng(2);
        CHECK(lightning_game(w, sub, 10, rng));
    }
    SUBCASE("classical pairs win with the single-register probability squared") {
        auto point = StateVector::basis_state(single(2));
        LightningSubmission sub{single(0), product(point, point), 1};
        auto eig = fixtures::cycle_eigenvalues(6, {1});
        int t = 3;
        double single_accept = 0.0;
        for (double l : eig) single_accept += (1.0 / 6.0) * std::pow((1.0 + l) / 2.0, 2 * t);
        CHECK(lightning_win_prob(w, sub, t) ==
              doctest::Approx(single_accept * single_accept).epsilon(1e-9));
    }
    SUBCASE("a register orthogonal to every flat state loses") {
        std::vector<std::pair<Label, Complex>> entries;
        for (std::int64_t i = 0; i < 6; ++i)
            entries.push_back({single(i), Complex((i % 2 ? -1.0 : 1.0) / std::sqrt(6.0), 0.0)});
        auto alternating = StateVector::from_entries(std::move(entries));
        LightningSubmission sub{single(0), product(honest, alternating), 1};
        CHECK(lightning_win_prob(w, sub, 1) == doctest::Approx(0.0).epsilon(1e-12));
        RngStream rng(3);
        CHECK(!lightning_game(w, sub, 1, rng));
    }
    SUBCASE("malformed joint states are rejected") {
        LightningSubmission sub{single(0), honest, 1}; // labels too short
        CHECK_THROWS_WITH_AS(lightning_win_prob(w, sub, 1), doctest::Contains("InvalidInput"),
                             Error);
    }
    SUBCASE("joint win probability matches two independent verifier runs on products") {
        RngStream rng(9);
        auto s1 = random_class_state(cls, rng);
        auto s2 = random_class_state(cls, rng);
        LightningSubmission sub{single(0), product(s1, s2), 1};
        int t = 4;
        double expected = acceptance_oracle(w, cls, s1, t) * acceptance_oracle(w, cls, s2, t);
        CHECK(lightning_win_prob(w, sub, t) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("walkable invariant json round trip") {
    auto w = fixtures::cycle(6, {2}, 2);
    auto j = w.to_json();
    auto back = WalkableInvariant::from_json(j);
    auto a = compute_orbits(w);
    auto b = compute_orbits(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].elements == b[i].elements);
    CHECK(back.to_json() == j);
}

TEST_CASE("validate rejects broken pairings") {
    auto w = fixtures::cycle(6, {1});
    w.inv_pair = {0, 1}; // claims each step is self-inverse, which is false
    CHECK_THROWS_AS(w.validate(), Error);
}
