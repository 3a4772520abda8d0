#pragma once

#include "qmlab/invariant.hpp"

#include <cmath>
#include <memory>

namespace qmlab::fixtures {

// cyclic walk on Z_n with generators {+step, -step} for each configured step;
// the invariant is x mod invMod (invMod = 1 gives a constant invariant)
inline invariant::WalkableInvariant cycle(std::int64_t n, std::vector<std::int64_t> steps,
                                          std::int64_t invMod = 1) {
    invariant::WalkableInvariant w;
    for (std::int64_t i = 0; i < n; ++i) w.domain.push_back(single(i));
    auto stepsPtr = std::make_shared<std::vector<std::int64_t>>(std::move(steps));
    w.r = 2 * static_cast<int>(stepsPtr->size());
    w.inv_pair.resize(static_cast<std::size_t>(w.r));
    for (std::size_t j = 0; j < stepsPtr->size(); ++j) {
        w.inv_pair[2 * j] = static_cast<int>(2 * j + 1);
        w.inv_pair[2 * j + 1] = static_cast<int>(2 * j);
    }
    w.sigma = [stepsPtr, n](int i, const Label& x) {
        std::int64_t s = (*stepsPtr)[static_cast<std::size_t>(i / 2)];
        if (i % 2) s = -s;
        return single(((x[0] + s) % n + n) % n);
    };
    w.inv = [invMod](const Label& x) { return single(x[0] % invMod); };
    return w;
}

// two-element domain with the swap listed twice (a self-paired bipartite walk)
inline invariant::WalkableInvariant bipartite_pair() {
    invariant::WalkableInvariant w;
    w.domain = {single(0), single(1)};
    w.r = 2;
    w.inv_pair = {1, 0};
    w.sigma = [](int, const Label& x) { return single(1 - x[0]); };
    w.inv = [](const Label&) { return single(0); };
    return w;
}

// closed-form eigenvalues of the cycle walk: averages of cos(2 pi k step / n)
inline std::vector<double> cycle_eigenvalues(std::int64_t n,
                                             const std::vector<std::int64_t>& steps) {
    std::vector<double> eig;
    for (std::int64_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::int64_t s : steps)
            acc += std::cos(2.0 * M_PI * static_cast<double>(k * s) / static_cast<double>(n));
        eig.push_back(acc / static_cast<double>(steps.size()));
    }
    return eig;
}

} // namespace qmlab::fixtures
