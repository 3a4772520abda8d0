#include "qmlab/mathutil.hpp"

#include "qmlab/errors.hpp"

#include <cmath>
#include <limits>

namespace qmlab {

std::int64_t umod(std::int64_t v, std::int64_t q) {
    std::int64_t r = v % q;
    if (r < 0) r += q;
    return r;
}

std::int64_t cmod(std::int64_t v, std::int64_t q) {
    std::int64_t r = umod(v, q);
    if (2 * r > q) r -= q;
    return r;
}

std::int64_t mod_pow(std::int64_t base, std::int64_t exp, std::int64_t q) {
    std::int64_t result = 1;
    std::int64_t b = umod(base, q);
    while (exp > 0) {
        if (exp & 1) result = static_cast<std::int64_t>((__int128)result * b % q);
        b = static_cast<std::int64_t>((__int128)b * b % q);
        exp >>= 1;
    }
    return result;
}

std::int64_t mod_inv(std::int64_t a, std::int64_t q) {
    require(umod(a, q) != 0, Err::InvalidInput, "inverse of 0 mod q");
    return mod_pow(a, q - 2, q);
}

bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

namespace {

// series expansion for P(a,x), x < a+1
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// continued fraction for Q(a,x), x >= a+1
double gamma_q_cf(double a, double x) {
    const double tiny = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double gamma_p(double a, double x) {
    require(a > 0.0 && x >= 0.0, Err::InvalidInput, "gamma_p domain");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    require(a > 0.0 && x >= 0.0, Err::InvalidInput, "gamma_q domain");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi2_sf(double x, double df) { return gamma_q(df / 2.0, x / 2.0); }

Chi2Result chi2_gof(const std::vector<double>& observed, const std::vector<double>& expected,
                    double min_expected) {
    require(observed.size() == expected.size(), Err::DimensionMismatch, "chi2 cell mismatch");
    require(!observed.empty(), Err::InvalidInput, "chi2 with no cells");
    std::vector<double> obs, exp;
    double obsAcc = 0.0, expAcc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        obsAcc += observed[i];
        expAcc += expected[i];
        if (expAcc >= min_expected) {
            obs.push_back(obsAcc);
            exp.push_back(expAcc);
            obsAcc = expAcc = 0.0;
        }
    }
    if (expAcc > 0.0 || obsAcc > 0.0) {
        if (exp.empty()) {
            obs.push_back(obsAcc);
            exp.push_back(expAcc);
        } else {
            obs.back() += obsAcc;
            exp.back() += expAcc;
        }
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (exp[i] <= 0.0) continue;
        double d = obs[i] - exp[i];
        stat += d * d / exp[i];
    }
    double df = static_cast<double>(obs.size() > 1 ? obs.size() - 1 : 1);
    return {stat, df, chi2_sf(stat, df)};
}

Chi2Result chi2_two_sample(const std::vector<double>& countsA, const std::vector<double>& countsB,
                           double min_expected) {
    require(countsA.size() == countsB.size(), Err::DimensionMismatch, "chi2 cell mismatch");
    double nA = 0.0, nB = 0.0;
    for (double c : countsA) nA += c;
    for (double c : countsB) nB += c;
    require(nA > 0.0 && nB > 0.0, Err::EmptyAudit, "empty sample in two-sample chi2");

    // pool adjacent cells until pooled expected counts are large enough
    std::vector<double> a, b;
    double accA = 0.0, accB = 0.0;
    for (std::size_t i = 0; i < countsA.size(); ++i) {
        accA += countsA[i];
        accB += countsB[i];
        double tot = accA + accB;
        if (nA * tot / (nA + nB) >= min_expected && nB * tot / (nA + nB) >= min_expected) {
            a.push_back(accA);
            b.push_back(accB);
            accA = accB = 0.0;
        }
    }
    if (accA > 0.0 || accB > 0.0) {
        if (a.empty()) {
            a.push_back(accA);
            b.push_back(accB);
        } else {
            a.back() += accA;
            b.back() += accB;
        }
    }
    if (a.size() < 2) return {0.0, 1.0, 1.0};
    double stat = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double tot = a[i] + b[i];
        if (tot <= 0.0) continue;
        double ea = nA * tot / (nA + nB);
        double eb = nB * tot / (nA + nB);
        stat += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
    }
    double df = static_cast<double>(a.size() - 1);
    return {stat, df, chi2_sf(stat, df)};
}

} // namespace qmlab
