#include "qmlab/klwe.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qmlab::klwe {

std::int64_t NoiseSampler::sample(RngStream& rng) const {
    require(width > 0.0, Err::InvalidParams, "noise width must be positive");
    if (width > 64.0) {
        // wide regime: rounded continuous Gaussian with matching mass width
        return static_cast<std::int64_t>(std::llround(rng.gauss() * width / std::sqrt(2.0 * M_PI)));
    }
    std::int64_t hi = static_cast<std::int64_t>(std::floor(tau * width));
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(2 * hi + 1));
    for (std::int64_t e = -hi; e <= hi; ++e)
        w.push_back(std::exp(-M_PI * static_cast<double>(e * e) / (width * width)));
    return -hi + static_cast<std::int64_t>(rng.pick_weighted(w));
}

void KLWEInstance::check_invariants() const {
    require(mat_mul_mod(S, A, q).isZero(), Err::InvalidParams, "S A != 0 mod q");
    require(mat_mul_mod(S, C, q).isZero(), Err::InvalidParams, "S C != 0 mod q");
    require(rank_mod(C, q) == m - k, Err::RankDeficient, "kernel basis rank");
    if (key.size() > 0) {
        const MatI& keyMat = (mode == Mode::Real) ? A : C;
        VecI recon = mat_vec_mod(keyMat, key, q);
        for (Eigen::Index i = 0; i < b.size(); ++i)
            require(umod(b[i] - recon[i] - noise[i], q) == 0, Err::InvalidParams,
                    "witness does not reconstruct b");
    }
}

nlohmann::json KLWEInstance::to_json(bool test_export) const {
    nlohmann::json j;
    j["k"] = k;
    j["n"] = n;
    j["m"] = m;
    j["q"] = q;
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
    std::vector<std::int64_t> bv(b.data(), b.data() + b.size());
    j["b"] = bv;
    if (test_export) {
        j["mode"] = (mode == Mode::Real) ? "real" : "random";
        j["effective_k"] = effective_k;
        std::vector<std::int64_t> kv(key.data(), key.data() + key.size());
        std::vector<std::int64_t> ev(noise.data(), noise.data() + noise.size());
        j["key"] = kv;
        j["noise"] = ev;
    }
    return j;
}

KLWEInstance KLWEInstance::from_json(const nlohmann::json& j) {
    KLWEInstance inst;
    inst.k = j.at("k").get<int>();
    inst.n = j.at("n").get<int>();
    inst.m = j.at("m").get<int>();
    inst.q = j.at("q").get<std::int64_t>();
    auto load = [](const nlohmann::json& rows, int cols) {
        MatI mat(static_cast<Eigen::Index>(rows.size()), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto row = rows[i].get<std::vector<std::int64_t>>();
            for (int c = 0; c < cols; ++c) mat(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)];
        }
        return mat;
    };
    inst.S = load(j.at("S"), inst.m);
    inst.A = load(j.at("A"), inst.n);
    inst.C = load(j.at("C"), inst.m - inst.k);
    auto bv = j.at("b").get<std::vector<std::int64_t>>();
    inst.b = Eigen::Map<VecI>(bv.data(), static_cast<Eigen::Index>(bv.size()));
    if (j.contains("mode")) {
        inst.mode = j.at("mode").get<std::string>() == "real" ? Mode::Real : Mode::Random;
        inst.effective_k = j.at("effective_k").get<int>();
        auto kv = j.at("key").get<std::vector<std::int64_t>>();
        auto ev = j.at("noise").get<std::vector<std::int64_t>>();
        inst.key = Eigen::Map<VecI>(kv.data(), static_cast<Eigen::Index>(kv.size()));
        inst.noise = Eigen::Map<VecI>(ev.data(), static_cast<Eigen::Index>(ev.size()));
    }
    inst.check_invariants();
    return inst;
}

KLWEInstance gen_instance(int k, int n, int m, std::int64_t q, const RowSampler& rowSampler,
                          const NoiseSampler& noise, Mode mode, RngStream& rng) {
    require(is_prime(q), Err::InvalidParams, "modulus must be prime");
    require(k >= 0 && m > n + k, Err::InvalidParams, "need m > n + k");
    KLWEInstance inst;
    inst.k = k;
    inst.effective_k = k;
    inst.n = n;
    inst.m = m;
    inst.q = q;
    inst.mode = mode;

    inst.S = MatI::Zero(k, m);
    bool ok = k == 0;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        for (int r = 0; r < k; ++r) {
            VecI row = rowSampler(rng);
            require(row.size() == m, Err::InvalidParams, "short row dimension");
            inst.S.row(r) = row.transpose();
        }
        ok = rank_mod(inst.S, q) == k;
    }
    require(ok, Err::DegenerateShortSet, "short rows kept coming out dependent");

    MatI K = k > 0 ? kernel_basis_mod(inst.S, q) : MatI(MatI::Identity(m, m));
    auto crng = rng.child("kernel-mix");
    inst.C = mat_mul_mod(K, random_invertible_mod(m - k, q, crng), q);
    auto arng = rng.child("public-matrix");
    do {
        inst.A = mat_mul_mod(inst.C, random_mat_mod(m - k, n, q, arng), q);
    } while (rank_mod(inst.A, q) < n);

    auto brng = rng.child("challenge");
    inst.noise = VecI::Zero(m);
    for (int i = 0; i < m; ++i) inst.noise[i] = noise.sample(brng);
    if (mode == Mode::Real) {
        inst.key = random_mat_mod(n, 1, q, brng).col(0);
        inst.b = mat_cmod(mat_vec_mod(inst.A, inst.key, q) + inst.noise, q);
    } else {
        inst.key = random_mat_mod(m - k, 1, q, brng).col(0);
        inst.b = mat_cmod(mat_vec_mod(inst.C, inst.key, q) + inst.noise, q);
    }
    inst.check_invariants();
    return inst;
}

namespace {

std::int64_t det_recursive(const MatI& T) {
    const int n = static_cast<int>(T.rows());
    if (n == 1) return T(0, 0);
    if (n == 2) return T(0, 0) * T(1, 1) - T(0, 1) * T(1, 0);
    __int128 acc = 0;
    for (int c = 0; c < n; ++c) {
        if (T(0, c) == 0) continue;
        MatI minor(n - 1, n - 1);
        for (int i = 1; i < n; ++i) {
            int cc = 0;
            for (int j = 0; j < n; ++j) {
                if (j == c) continue;
                minor(i - 1, cc++) = T(i, j);
            }
        }
        __int128 term = static_cast<__int128>(T(0, c)) * det_recursive(minor);
        acc += (c % 2 == 0) ? term : -term;
    }
    require(acc <= std::numeric_limits<std::int64_t>::max() &&
                acc >= std::numeric_limits<std::int64_t>::min(),
            Err::InternalError, "determinant overflows 64 bits");
    return static_cast<std::int64_t>(acc);
}

} // namespace

AdjugatePair adjugate(const MatI& T) {
    require(T.rows() == T.cols() && T.rows() >= 1, Err::InvalidParams, "adjugate needs square T");
    const int n = static_cast<int>(T.rows());
    AdjugatePair out;
    out.T = T;
    out.detT = det_recursive(T);
    out.Tadj = MatI::Zero(n, n);
    if (n == 1) {
        out.Tadj(0, 0) = 1;
    } else {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                MatI minor(n - 1, n - 1);
                int rr = 0;
                for (int r = 0; r < n; ++r) {
                    if (r == i) continue;
                    int cc = 0;
                    for (int c = 0; c < n; ++c) {
                        if (c == j) continue;
                        minor(rr, cc++) = T(r, c);
                    }
                    ++rr;
                }
                std::int64_t cof = det_recursive(minor);
                out.Tadj(j, i) = ((i + j) % 2 == 0) ? cof : -cof;
            }
        }
    }
    MatI check = out.Tadj * T;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            require(check(i, j) == (i == j ? out.detT : 0), Err::InternalError,
                    "adjugate identity failed");
    return out;
}

namespace {

// first k-column subset whose submatrix is invertible mod q, lexicographic
std::optional<std::vector<int>> find_full_rank_columns(const MatI& S, std::int64_t q) {
    const int k = static_cast<int>(S.rows());
    const int total = static_cast<int>(S.cols());
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (;;) {
        MatI T(k, k);
        for (int c = 0; c < k; ++c) T.col(c) = S.col(idx[static_cast<std::size_t>(c)]);
        if (rank_mod(T, q) == k) return idx;
        int pos = k - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == total - k + pos) --pos;
        if (pos < 0) return std::nullopt;
        ++idx[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < k; ++i)
            idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
}

} // namespace

LiftResult lift_lwe_to_klwe(const MatI& lweA, const VecI& lweT, const MatI& S, std::int64_t q,
                            const ReductionParams& params, double sigma, Mode mode,
                            RngStream& rng) {
    require(is_prime(q), Err::InvalidParams, "modulus must be prime");
    require(S.cwiseAbs().maxCoeff() <= params.B, Err::InvalidParams,
            "short rows exceed the declared bound");
    MatI Sred = S;
    int kEff = static_cast<int>(S.rows());
    // rank fallback: drop rows until the published rows are independent mod q
    while (kEff > 0 && rank_mod(Sred, q) < kEff) {
        Sred = MatI(Sred.topRows(kEff - 1));
        --kEff;
    }
    require(kEff > 0, Err::RankDeficient, "short matrix has rank zero");
    const int total = static_cast<int>(S.cols());
    const int mRed = total - kEff;
    require(lweA.rows() == mRed && lweT.size() == mRed, Err::DimensionMismatch,
            "base challenge must have (columns - effective k) samples");

    auto cols = find_full_rank_columns(Sred, q);
    require(cols.has_value(), Err::RankDeficient, "no invertible column subset");
    MatI T(kEff, kEff);
    for (int c = 0; c < kEff; ++c) T.col(c) = Sred.col((*cols)[static_cast<std::size_t>(c)]);
    AdjugatePair adj = adjugate(T);
    require(adj.detT % q != 0, Err::RankDeficient, "chosen submatrix is singular mod q");
    MatI Stilde = adj.Tadj * Sred; // exact integer product

    std::vector<int> nonChosen;
    for (int c = 0; c < total; ++c)
        if (std::find(cols->begin(), cols->end(), c) == cols->end()) nonChosen.push_back(c);

    MatI U = MatI::Zero(total, mRed);
    for (int c = 0; c < mRed; ++c) {
        for (int i = 0; i < kEff; ++i)
            U((*cols)[static_cast<std::size_t>(i)], c) = Stilde(i, nonChosen[static_cast<std::size_t>(c)]);
        U(nonChosen[static_cast<std::size_t>(c)], c) = -adj.detT;
    }

    // the two structural claims, checked on every run
    MatI zero = Sred * U;
    require(zero.isZero(), Err::InternalError, "S U != 0 over the integers");
    std::int64_t maxU = U.cwiseAbs().maxCoeff();
    double bound = std::pow(2.0 * static_cast<double>(params.B), kEff);
    require(static_cast<double>(maxU) <= bound + 1e-9, Err::InternalError,
            "kernel map entries exceed (2B)^k");

    double fN = params.fN;
    if (fN <= 0.0) fN = bound * static_cast<double>(total) * static_cast<double>(total);
    require(fN >= bound, Err::InvalidParams, "noise blow-up below the smudging envelope");

    LiftResult res;
    res.U = U;
    res.detT = adj.detT;
    res.max_abs_U = maxU;
    res.chosen_columns = *cols;
    res.effective_k = kEff;

    KLWEInstance& inst = res.instance;
    inst.k = kEff;
    inst.effective_k = kEff;
    inst.n = static_cast<int>(lweA.cols());
    inst.m = total;
    inst.q = q;
    inst.mode = mode;
    inst.S = Sred;
    inst.A = mat_mul_mod(U, lweA, q);

    NoiseSampler big{sigma * fN, 8.0};
    auto nrng = rng.child("lift-noise");
    inst.noise = VecI::Zero(total);
    for (int i = 0; i < total; ++i) inst.noise[i] = big.sample(nrng);
    inst.b = mat_cmod(mat_vec_mod(U, lweT, q) + inst.noise, q);

    auto wrng = rng.child("kernel-mix");
    for (int attempt = 0; attempt < 100; ++attempt) {
        MatI W = random_mat_mod(mRed, mRed, q, wrng);
        inst.C = mat_mul_mod(U, W, q);
        if (rank_mod(inst.C, q) == mRed) break;
        require(attempt + 1 < 100, Err::InternalError, "could not randomize the kernel basis");
    }
    if (mode == Mode::Random) {
        // U t is uniform over the kernel; recover the kernel coordinates
        auto rPrime = solve_mod(inst.C, mat_cmod(VecI(inst.b - inst.noise), q), q);
        require(rPrime.has_value(), Err::InternalError, "random-case challenge off the kernel");
        inst.key = *rPrime;
    }
    inst.check_invariants();
    return res;
}

KLWEInstance rerandomize_key(const KLWEInstance& inst, RngStream& rng) {
    KLWEInstance out = inst;
    VecI shift = random_mat_mod(inst.n, 1, inst.q, rng).col(0);
    out.b = mat_cmod(inst.b + mat_vec_mod(inst.A, shift, inst.q), inst.q);
    if (inst.mode == Mode::Real && inst.key.size() > 0) {
        out.key = mat_cmod(VecI(inst.key + shift), inst.q);
    } else if (inst.mode == Mode::Random && inst.key.size() > 0) {
        // the added A r'' lies in the kernel span, so the class is preserved
        auto rPrime = solve_mod(inst.C, mat_cmod(VecI(out.b - inst.noise), inst.q), inst.q);
        require(rPrime.has_value(), Err::InternalError, "kernel class not preserved");
        out.key = *rPrime;
    }
    out.check_invariants();
    return out;
}

AuditReport distribution_audit(const InstanceGen& genA, const InstanceGen& genB, int statistics,
                               int trials, RngStream& rng) {
    require(trials > 0, Err::EmptyAudit, "audit needs at least one trial");
    require(statistics > 0, Err::EmptyAudit, "audit needs at least one statistic");
    constexpr int kBins = 8;

    auto collect = [&](const InstanceGen& gen, std::uint64_t salt,
                       std::vector<std::vector<double>>& hist, bool& saViolation) {
        for (int trial = 0; trial < trials; ++trial) {
            auto trng = rng.child(salt).child(static_cast<std::uint64_t>(trial));
            KLWEInstance inst = gen(trng);
            if (!mat_mul_mod(inst.S, inst.A, inst.q).isZero()) saViolation = true;
            std::vector<std::int64_t> pool;
            for (Eigen::Index i = 0; i < inst.A.rows(); ++i)
                for (Eigen::Index j = 0; j < inst.A.cols(); ++j) pool.push_back(inst.A(i, j));
            for (Eigen::Index i = 0; i < inst.b.size(); ++i) pool.push_back(inst.b[i]);
            for (Eigen::Index i = 0; i < inst.C.rows(); ++i)
                for (Eigen::Index j = 0; j < inst.C.cols(); ++j) pool.push_back(inst.C(i, j));
            for (int s = 0; s < statistics; ++s) {
                // seeded linear probe over the public entries
                RngStream probe(0x5eedull + static_cast<std::uint64_t>(s));
                __int128 acc = 0;
                int touches = 3 + s % 5;
                for (int tch = 0; tch < touches; ++tch) {
                    std::size_t at = probe.below(pool.size());
                    std::int64_t coef =
                        1 + static_cast<std::int64_t>(probe.below(static_cast<std::uint64_t>(inst.q - 1)));
                    acc += static_cast<__int128>(coef) * umod(pool[at], inst.q);
                }
                std::int64_t v = umod(static_cast<std::int64_t>(acc % inst.q), inst.q);
                int bin = static_cast<int>(v * kBins / inst.q);
                hist[static_cast<std::size_t>(s)][static_cast<std::size_t>(bin)] += 1.0;
            }
        }
    };

    std::vector<std::vector<double>> histA(static_cast<std::size_t>(statistics),
                                           std::vector<double>(kBins, 0.0));
    std::vector<std::vector<double>> histB = histA;
    AuditReport rep;
    rep.statistics = statistics;
    collect(genA, 0xaaaaull, histA, rep.sa_violation);
    collect(genB, 0xbbbbull, histB, rep.sa_violation);

    for (int s = 0; s < statistics; ++s) {
        auto r = chi2_two_sample(histA[static_cast<std::size_t>(s)], histB[static_cast<std::size_t>(s)]);
        rep.p_values.push_back(r.p_value);
        if (r.p_value < 0.01) ++rep.rejected_at_1pct;
    }
    rep.pass = !rep.sa_violation && rep.rejected_at_1pct <= std::max(3, statistics / 16);
    return rep;
}

nlohmann::json AuditReport::to_json() const {
    nlohmann::json j;
    j["statistics"] = statistics;
    j["rejected_at_1pct"] = rejected_at_1pct;
    j["sa_violation"] = sa_violation;
    j["pass"] = pass;
    j["p_values"] = p_values;
    return j;
}

double mod_switch_params(std::int64_t n, std::int64_t q, std::int64_t qPrime, double sigma,
                         double eps, double B) {
    require(n >= 1 && q >= 2 && qPrime >= 2, Err::InvalidParams, "parameter domain");
    require(eps > 0.0 && eps < 0.5, Err::InvalidParams, "eps must be in (0, 1/2)");
    require(sigma > 0.0 && B >= 0.0, Err::InvalidParams, "parameter domain");
    double scaled = sigma * static_cast<double>(qPrime) / static_cast<double>(q);
    double smudge = (4.0 / M_PI) * std::log(2.0 * static_cast<double>(n) * (1.0 + 1.0 / eps)) * B * B;
    return std::sqrt(scaled * scaled + smudge);
}

std::pair<double, std::int64_t> mod_exp_params(std::int64_t n, std::int64_t k, std::int64_t q,
                                               double sigma, double eps, double B) {
    require(k >= 1 && n % k == 0, Err::InvalidParams, "k must divide n");
    require(eps > 0.0 && eps < 0.5, Err::InvalidParams, "eps must be in (0, 1/2)");
    double qk = std::pow(static_cast<double>(q), static_cast<double>(k - 1));
    double smudge = (4.0 / M_PI) * std::log(2.0 * static_cast<double>(n) * (1.0 + 1.0 / eps));
    double sigmaP = std::sqrt(sigma * qk * sigma * qk + smudge * (B * qk) * (B * qk));
    return {sigmaP, n / k};
}

std::pair<double, std::int64_t> noise_key_params(std::int64_t n, std::int64_t m, std::int64_t q,
                                                 double sigma, double eps) {
    require(q >= 25, Err::InvalidParams, "q must be at least 25");
    require(eps > 0.0 && eps < 0.5, Err::InvalidParams, "eps must be in (0, 1/2)");
    double s = std::sqrt(std::log(2.0 * static_cast<double>(n) * (1.0 + 1.0 / eps)) / M_PI);
    double sigmaP = std::sqrt(sigma * sigma + s * s);
    std::int64_t mPrime = m - (16 * n + static_cast<std::int64_t>(std::ceil(
                                            4.0 * std::log(std::log(static_cast<double>(q))))));
    return {sigmaP, mPrime};
}

std::vector<HybridRow> hybrid_table(const HybridConfig& cfg) {
    std::vector<HybridRow> rows;
    const double gap = cfg.log2_eta;
    const double f = cfg.log2_fN;
    const double qBig = cfg.log2_q;
    const double qExp = static_cast<double>(cfg.n) * cfg.log2_qPrime;
    const std::string m = std::to_string(cfg.m);
    const std::string n = std::to_string(cfg.n);
    rows.push_back({"k-LWE", "1", m, qBig, "uniform", qBig - gap, "published-short-vector challenge"});
    rows.push_back({"LWE", "1", m, qBig, "uniform", qBig - gap - f, "constant-k kernel lift"});
    rows.push_back({"LWE", "1", m, qBig, "noise", qBig - gap - f, "uniform-key rerandomization"});
    rows.push_back({"LWE", "1", m, qExp, "noise", qExp - gap - f, "modulus reduction"});
    rows.push_back({"LWE", n, m, cfg.log2_qPrime, "noise", cfg.log2_qPrime - gap - f,
                    "modulus-dimension trade"});
    rows.push_back({"LWE", n, m, cfg.log2_qPrime, "uniform", cfg.log2_qPrime - gap - f,
                    "noise-to-uniform key switch"});
    rows.push_back({"GapSVP", n, "-", 0.0, "-", gap + f, "worst-case anchor"});
    return rows;
}

nlohmann::json hybrid_table_json(const HybridConfig& cfg) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : hybrid_table(cfg)) {
        nlohmann::json row;
        row["assumption"] = r.assumption;
        row["dimension"] = r.dimension;
        row["samples"] = r.samples;
        row["log2_modulus"] = r.log2_modulus;
        row["key_dist"] = r.key_dist;
        row["log2_noise"] = r.log2_noise;
        row["justification"] = r.justification;
        arr.push_back(std::move(row));
    }
    return arr;
}

std::string hybrid_table_markdown(const HybridConfig& cfg) {
    std::ostringstream os;
    os << "| assumption | dim | samples | log2(modulus) | key | log2(noise) | step |\n";
    os << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : hybrid_table(cfg)) {
        os << "| " << r.assumption << " | " << r.dimension << " | " << r.samples << " | ";
        if (r.assumption == "GapSVP")
            os << "-";
        else
            os << r.log2_modulus;
        os << " | " << r.key_dist << " | " << r.log2_noise << " | " << r.justification << " |\n";
    }
    return os.str();
}

} // namespace qmlab::klwe
