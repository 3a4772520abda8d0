#include "qmlab/modq.hpp"

namespace qmlab {

MatI mat_cmod(MatI a, std::int64_t q) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = cmod(a(i, j), q);
    return a;
}

MatI mat_mul_mod(const MatI& a, const MatI& b, std::int64_t q) {
    require(a.cols() == b.rows(), Err::DimensionMismatch, "matrix product shapes");
    MatI out(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            __int128 acc = 0;
            for (Eigen::Index k = 0; k < a.cols(); ++k)
                acc += static_cast<__int128>(a(i, k)) * b(k, j);
            out(i, j) = cmod(static_cast<std::int64_t>(acc % q), q);
        }
    }
    return out;
}

VecI mat_vec_mod(const MatI& a, const VecI& v, std::int64_t q) {
    return mat_mul_mod(a, v, q);
}

namespace {

// row echelon form in place; returns pivot columns
std::vector<int> echelon_mod(MatI& a, std::int64_t q) {
    std::vector<int> pivots;
    int row = 0;
    for (int col = 0; col < a.cols() && row < a.rows(); ++col) {
        int sel = -1;
        for (int r = row; r < a.rows(); ++r)
            if (umod(a(r, col), q) != 0) {
                sel = r;
                break;
            }
        if (sel < 0) continue;
        a.row(row).swap(a.row(sel));
        std::int64_t inv = mod_inv(a(row, col), q);
        for (int c = 0; c < a.cols(); ++c)
            a(row, c) = cmod(static_cast<std::int64_t>(static_cast<__int128>(a(row, c)) * inv % q), q);
        for (int r = 0; r < a.rows(); ++r) {
            if (r == row) continue;
            std::int64_t f = umod(a(r, col), q);
            if (f == 0) continue;
            for (int c = 0; c < a.cols(); ++c)
                a(r, c) = cmod(a(r, c) - static_cast<std::int64_t>(static_cast<__int128>(f) * a(row, c) % q), q);
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

} // namespace

int rank_mod(MatI a, std::int64_t q) { return static_cast<int>(echelon_mod(a, q).size()); }

MatI kernel_basis_mod(const MatI& a, std::int64_t q) {
    MatI r = a;
    std::vector<int> pivots = echelon_mod(r, q);
    const int m = static_cast<int>(a.cols());
    std::vector<int> free_cols;
    for (int c = 0; c < m; ++c)
        if (std::find(pivots.begin(), pivots.end(), c) == pivots.end()) free_cols.push_back(c);
    MatI K = MatI::Zero(m, static_cast<Eigen::Index>(free_cols.size()));
    for (std::size_t fi = 0; fi < free_cols.size(); ++fi) {
        int fc = free_cols[fi];
        K(fc, static_cast<Eigen::Index>(fi)) = 1;
        for (std::size_t pi = 0; pi < pivots.size(); ++pi)
            K(pivots[pi], static_cast<Eigen::Index>(fi)) =
                cmod(-r(static_cast<Eigen::Index>(pi), fc), q);
    }
    return K;
}

std::optional<VecI> solve_mod(const MatI& a, const VecI& b, std::int64_t q) {
    MatI aug(a.rows(), a.cols() + 1);
    aug.leftCols(a.cols()) = a;
    aug.col(a.cols()) = b;
    MatI r = aug;
    std::vector<int> pivots = echelon_mod(r, q);
    // inconsistent iff a pivot lands in the augmented column
    if (!pivots.empty() && pivots.back() == static_cast<int>(a.cols())) return std::nullopt;
    VecI x = VecI::Zero(a.cols());
    for (std::size_t pi = 0; pi < pivots.size(); ++pi)
        x[pivots[pi]] = cmod(r(static_cast<Eigen::Index>(pi), a.cols()), q);
    // verify (free variables are zero)
    VecI chk = mat_vec_mod(a, x, q);
    for (Eigen::Index i = 0; i < b.size(); ++i)
        if (umod(chk[i] - b[i], q) != 0) return std::nullopt;
    return x;
}

MatI random_mat_mod(int rows, int cols, std::int64_t q, RngStream& rng) {
    MatI out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            out(i, j) = cmod(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(q))), q);
    return out;
}

MatI random_invertible_mod(int n, std::int64_t q, RngStream& rng) {
    for (int tries = 0; tries < 1000; ++tries) {
        MatI m = random_mat_mod(n, n, q, rng);
        if (rank_mod(m, q) == n) return m;
    }
    fail(Err::InternalError, "could not sample an invertible matrix");
}

} // namespace qmlab
