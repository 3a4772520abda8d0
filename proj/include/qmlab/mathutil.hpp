#pragma once

#include <cstdint>
#include <vector>

namespace qmlab {

// centered representative of v mod q, in [-(q-1)/2, (q-1)/2] for odd q
std::int64_t cmod(std::int64_t v, std::int64_t q);
// representative in [0, q)
std::int64_t umod(std::int64_t v, std::int64_t q);
std::int64_t mod_pow(std::int64_t base, std::int64_t exp, std::int64_t q);
// inverse mod prime q
std::int64_t mod_inv(std::int64_t a, std::int64_t q);
bool is_prime(std::int64_t n);

// regularized incomplete gamma functions P(a,x), Q(a,x) = 1 - P(a,x)
double gamma_p(double a, double x);
double gamma_q(double a, double x);
// survival function of the chi-square distribution with df degrees of freedom
double chi2_sf(double x, double df);

struct Chi2Result {
    double statistic;
    double df;
    double p_value;
};

// Pearson goodness-of-fit of observed counts against expected counts
// (cells with expected < min_expected are pooled into the previous cell).
Chi2Result chi2_gof(const std::vector<double>& observed, const std::vector<double>& expected,
                    double min_expected = 5.0);

// two-sample chi-square homogeneity test over shared categories
Chi2Result chi2_two_sample(const std::vector<double>& countsA, const std::vector<double>& countsB,
                           double min_expected = 5.0);

} // namespace qmlab
