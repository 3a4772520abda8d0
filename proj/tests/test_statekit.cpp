#include "qmlab/statekit.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace qmlab;
using namespace qmlab::statekit;

namespace {

std::vector<Label> range_labels(std::int64_t n) {
    std::vector<Label> out;
    for (std::int64_t i = 0; i < n; ++i) out.push_back(single(i));
    return out;
}

StateVector random_state(const std::vector<Label>& basis, RngStream& rng) {
    std::vector<std::pair<Label, Complex>> entries;
    for (const auto& l : basis)
        entries.push_back({l, Complex(rng.gauss(), rng.gauss())});
    return StateVector::from_entries(std::move(entries)).normalized();
}

} // namespace

TEST_CASE("uniform superposition amplitudes") {
    CHECK(uniform_superposition({single(7)}).amp(single(7)) == Complex(1.0));
    auto s4 = uniform_superposition(range_labels(4));
    for (const auto& l : s4.basis) CHECK(s4.amp(l).real() == doctest::Approx(0.5).epsilon(1e-12));
    auto s9 = uniform_superposition(range_labels(9));
    for (const auto& l : s9.basis)
        CHECK(s9.amp(l).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(uniform_superposition({}), Error);
}

TEST_CASE("apply_bijection basics") {
    auto s = uniform_superposition(range_labels(4));
    auto same = apply_bijection(s, [](const Label& l) { return l; });
    CHECK(state_l2_distance(s, same) == doctest::Approx(0.0));

    auto zero = StateVector::basis_state(single(0));
    auto swapped = apply_bijection(zero, [](const Label& l) { return single(1 - l[0]); });
    CHECK(swapped.amp(single(1)) == Complex(1.0));

    // cyclic shift composed six times is the identity on Z6
    RngStream rng(11);
    auto st = random_state(range_labels(6), rng);
    StateVector cur = st;
    for (int k = 0; k < 6; ++k)
        cur = apply_bijection(cur, [](const Label& l) { return single((l[0] + 1) % 6); });
    CHECK(state_l2_distance(st, cur) < 1e-12);

    auto collide = [](const Label&) { return single(0); };
    CHECK_THROWS_WITH_AS(apply_bijection(s, collide), doctest::Contains("NotBijective"), Error);
}

TEST_CASE("apply_bijection preserves the norm for random permutations") {
    RngStream rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto trng = rng.child(static_cast<std::uint64_t>(trial));
        int n = 3 + static_cast<int>(trng.below(40));
        std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i)
            std::swap(perm[static_cast<std::size_t>(i)],
                      perm[trng.below(static_cast<std::uint64_t>(i + 1))]);
        auto st = random_state(range_labels(n), trng);
        st.amps *= 1.7; // unnormalized branches are first-class
        auto out = apply_bijection(
            st, [&](const Label& l) { return single(perm[static_cast<std::size_t>(l[0])]); });
        CHECK(std::fabs(out.amps.squaredNorm() - st.amps.squaredNorm()) < 1e-12);
    }
}

TEST_CASE("measure_function exact branches") {
    auto parity = [](const Label& l) { return single(l[0] % 2); };
    auto s = uniform_superposition(range_labels(4));
    auto branches = measure_branches(s, parity);
    REQUIRE(branches.size() == 2);
    for (const auto& b : branches) {
        CHECK(b.prob == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(b.post.dim() == 2);
        for (const auto& l : b.post.basis) CHECK(l[0] % 2 == b.outcome[0]);
    }

    // classical state measures to itself
    RngStream rng(3);
    auto point = StateVector::basis_state(single(2));
    auto r = measure_function(point, parity, rng);
    CHECK(r.outcome == single(0));
    CHECK(r.prob == doctest::Approx(1.0));
    CHECK(r.post.amp(single(2)) == Complex(1.0));

    // Z6 with x mod 3: three branches of probability 1/3, two labels each
    auto mod3 = [](const Label& l) { return single(l[0] % 3); };
    auto s6 = uniform_superposition(range_labels(6));
    auto b3 = measure_branches(s6, mod3);
    REQUIRE(b3.size() == 3);
    for (const auto& b : b3) {
        CHECK(b.prob == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(b.post.dim() == 2);
    }
}

TEST_CASE("measure_function sampling matches exact probabilities") {
    // multinomial agreement at 3 sigma over 1e5 seeded draws
    auto mod3 = [](const Label& l) { return single(l[0] % 3); };
    std::vector<std::pair<Label, Complex>> entries;
    for (std::int64_t i = 0; i < 6; ++i)
        entries.push_back({single(i), Complex(std::sqrt((i + 1) / 21.0), 0.0)});
    auto s = StateVector::from_entries(std::move(entries));
    auto branches = measure_branches(s, mod3);

    const int draws = 100000;
    RngStream rng(99);
    std::map<Label, int> counts;
    for (int i = 0; i < draws; ++i) counts[measure_function(s, mod3, rng).outcome] += 1;
    for (const auto& b : branches) {
        double expect = b.prob * draws;
        double sd = std::sqrt(draws * b.prob * (1.0 - b.prob));
        CHECK(std::fabs(counts[b.outcome] - expect) <= 3.0 * sd);
    }
}

TEST_CASE("project_family") {
    auto s = uniform_superposition(range_labels(4));
    SUBCASE("projecting onto the state itself accepts with certainty") {
        auto r = project_family(s, {s});
        CHECK(r.prob == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(state_l2_distance(r.post(), s) < 1e-10);
    }
    SUBCASE("orthogonal family gives a zero branch") {
        std::vector<std::pair<Label, Complex>> entries = {{single(0), 1.0 / std::sqrt(2.0)},
                                                          {single(1), -1.0 / std::sqrt(2.0)}};
        auto minus = StateVector::from_entries(std::move(entries));
        auto plus01 = uniform_superposition({single(0), single(1)});
        auto r = project_family(plus01, {minus});
        CHECK(r.prob == doctest::Approx(0.0));
        CHECK_THROWS_WITH_AS(r.post(), doctest::Contains("ZeroBranch"), Error);
    }
    SUBCASE("classical state against a flat block of size 4") {
        auto r = project_family(StateVector::basis_state(single(2)), {s});
        CHECK(r.prob == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("non-orthonormal family is rejected") {
        CHECK_THROWS_WITH_AS(project_family(s, {s, s}), doctest::Contains("InvalidProjector"),
                             Error);
    }
    SUBCASE("idempotence") {
        RngStream rng(21);
        auto st = random_state(range_labels(6), rng);
        auto fam = std::vector<StateVector>{uniform_superposition(range_labels(3)),
                                            uniform_superposition({single(3), single(4)})};
        auto once = project_family(st, fam);
        auto twice = project_family(once.post(), fam);
        CHECK(twice.prob == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(state_l2_distance(once.post().embedded(st.basis), twice.post().embedded(st.basis)) <
              1e-10);
    }
}

TEST_CASE("trace distance") {
    auto zero = pure_density(StateVector::basis_state(single(0)));
    CHECK(trace_distance(zero, zero) == doctest::Approx(0.0));

    auto one = pure_density(StateVector::basis_state(single(1)).embedded(range_labels(2)));
    auto zero2 = pure_density(StateVector::basis_state(single(0)).embedded(range_labels(2)));
    CHECK(trace_distance(zero2, one) == doctest::Approx(1.0).epsilon(1e-12));

    auto plus = pure_density(uniform_superposition(range_labels(2)));
    CHECK(trace_distance(plus, zero2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));

    SUBCASE("triangle inequality on random triples") {
        RngStream rng(17);
        for (int trial = 0; trial < 25; ++trial) {
            auto trng = rng.child(static_cast<std::uint64_t>(trial));
            auto a = pure_density(random_state(range_labels(5), trng));
            auto b = pure_density(random_state(range_labels(5), trng));
            auto c = pure_density(random_state(range_labels(5), trng));
            CHECK(trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-9);
        }
    }
}

TEST_CASE("state_l2_distance handles unnormalized inputs") {
    auto a = StateVector::basis_state(single(0));
    CHECK(state_l2_distance(a, a) == doctest::Approx(0.0));
    auto b2 = range_labels(2);
    CHECK(state_l2_distance(a.embedded(b2), StateVector::basis_state(single(1)).embedded(b2)) ==
          doctest::Approx(std::sqrt(2.0)));
    StateVector half = a;
    half.amps *= 0.5;
    CHECK(state_l2_distance(a, half) == doctest::Approx(0.5));
    CHECK_THROWS_AS(state_l2_distance(a, uniform_superposition(range_labels(3))), Error);
}

TEST_CASE("state json round trip") {
    RngStream rng(8);
    auto s = random_state(range_labels(5), rng);
    auto back = StateVector::from_json(s.to_json());
    CHECK(back.basis == s.basis);
    CHECK(state_l2_distance(s, back) < 1e-15);
}

TEST_CASE("density matrix validation catches bad inputs") {
    DensityMatrix d = pure_density(uniform_superposition(range_labels(3)));
    d.validate();
    d.mat(0, 1) += Complex(0.5, 0.0); // breaks Hermiticity
    CHECK_THROWS_AS(d.validate(), Error);
}
