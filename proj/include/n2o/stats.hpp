#pragma once

#include <span>
#include <vector>

namespace n2o {

/// Ranks starting at 1; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of the average-rank vectors. Throws ConfigError on a
/// length mismatch or fewer than two values, DataError when either input is
/// constant (rho is undefined there).
double spearman_rho(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> values);

/// Population standard deviation (divides by the number of values).
double population_std(std::span<const double> values);

/// Sample standard deviation (divides by n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> values);

}  // namespace n2o
