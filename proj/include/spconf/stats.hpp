#pragma once

#include <utility>
#include <vector>

namespace spconf {

double mean(const std::vector<double>& v);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sd(const std::vector<double>& v);
double median(std::vector<double> v);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Least-squares slope of y on x with intercept.
double slope(const std::vector<double>& x, const std::vector<double>& y);

/// Standard normal quantile.
double normal_quantile(double p);
/// Two-sided normal interval value +/- z_{(1+level)/2} * se.
std::pair<double, double> normal_interval(double value, double se, double level);

struct WelchResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};
/// Two-sample Welch t-test for equal means.
WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace spconf
