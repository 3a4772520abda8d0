#pragma once

#include "qmlab/errors.hpp"
#include "qmlab/mathutil.hpp"
#include "qmlab/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace qmlab {

using MatI = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using VecI = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// all representatives centered in [-(q-1)/2, (q-1)/2]; q prime throughout

MatI mat_cmod(MatI a, std::int64_t q);
MatI mat_mul_mod(const MatI& a, const MatI& b, std::int64_t q);
VecI mat_vec_mod(const MatI& a, const VecI& v, std::int64_t q);
int rank_mod(MatI a, std::int64_t q);
// columns spanning {v : a * v = 0 mod q}; full column rank m - rank(a)
MatI kernel_basis_mod(const MatI& a, std::int64_t q);
// one solution x of a * x = b mod q, or nullopt when inconsistent
std::optional<VecI> solve_mod(const MatI& a, const VecI& b, std::int64_t q);
MatI random_mat_mod(int rows, int cols, std::int64_t q, RngStream& rng);
MatI random_invertible_mod(int n, std::int64_t q, RngStream& rng);

} // namespace qmlab
