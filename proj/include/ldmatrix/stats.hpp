#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ldmatrix {

double normal_pdf(double x);
double normal_cdf(double x);
double normal_sf(double x);  // 1 - cdf, accurate in the tail

// Sample mean with its delete-one jackknife standard error.  For the sample
// mean the jackknife SE coincides with SD/sqrt(n) (n-1 denominator SD); the
// computation goes through the delete-one identity so the name is honest.
struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
MeanSE jackknife_mean(const std::vector<double>& values);

// log(sum_i exp(x[i])) with max-shift; -inf for an empty input.
double log_sum_exp(const std::vector<double>& x);

// Mean and SE of exp(x_i) computed in the log domain:
// returns {log_mean, log_se}.  Useful when the x_i are log-weights.
struct LogMeanSE {
  double log_mean;
  double log_se;
};
LogMeanSE log_domain_mean(const std::vector<double>& logs);

// One-sided exact (Clopper-Pearson) upper confidence bound for a binomial
// proportion when zero successes were observed in n trials.
double clopper_pearson_zero_upper(std::size_t n, double confidence);

// Dvoretzky-Kiefer-Wolfowitz band half-width: with probability >= 1 - delta
// the empirical CDF of n samples is within eps of the true CDF uniformly.
double dkw_epsilon(std::size_t n, double delta);

// Asymptotic two-sample Kolmogorov-Smirnov test.  Returns the p-value of the
// observed sup-distance under the null that both samples share a law.
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Kolmogorov distribution survival function Q(lam) = 2 sum (-1)^{k-1}
// exp(-2 k^2 lam^2).
double kolmogorov_sf(double lam);

// Halton low-discrepancy sequence value (van der Corput radical inverse of
// index+1 in the given prime base); in (0,1).
double halton(std::size_t index, unsigned base);

// Best rational approximation p/q to x with q <= max_den, via continued
// fractions (includes intermediate fractions, so it is the true best).
struct BestRational {
  long long p = 0;
  long long q = 1;
  double err = 0.0;  // |x - p/q|
};
BestRational best_rational(double x, long long max_den);

}  // namespace ldmatrix
