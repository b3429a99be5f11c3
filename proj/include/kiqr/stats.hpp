#pragma once

#include "kiqr/common.hpp"

#include <span>

namespace kiqr::stats {

/// Phi(x) through the complementary error function.
double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

/// Upper tail of the chi-square distribution with one degree of freedom.
double chi_square_1df_sf(double x);

/// Two-sided p-value of a t statistic.
double student_t_two_sided(double t, double df);

/// Two-sided p-value of a standard-normal statistic.
double normal_two_sided(double z);

/// Minimizer of the empirical check loss: the ceil(n * tau)-th order statistic.
double sample_quantile(std::span<const double> values, double tau);

/// Linear-interpolation (type 7) quantile, used by the sparsity estimate.
double interpolated_quantile(std::span<const double> sorted_values, double p);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_sd(std::span<const double> values);

}  // namespace kiqr::stats
