#include "spconf/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "spconf/error.hpp"

namespace spconf {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("mean: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  // shifted by the first value so a constant sequence gives exactly zero
  const double shift = v.front();
  double s = 0.0;
  double ss = 0.0;
  for (double x : v) {
    s += x - shift;
    ss += (x - shift) * (x - shift);
  }
  const auto n = static_cast<double>(v.size());
  return std::sqrt(std::max(0.0, ss - s * s / n) / (n - 1.0));
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

namespace {

struct Moments {
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
};

Moments centered_moments(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("paired statistics need >= 2 equal-length samples");
  const double mx = mean(x);
  const double my = mean(y);
  Moments m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.sxx += (x[i] - mx) * (x[i] - mx);
    m.syy += (y[i] - my) * (y[i] - my);
    m.sxy += (x[i] - mx) * (y[i] - my);
  }
  return m;
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const Moments m = centered_moments(x, y);
  return m.sxy / std::sqrt(m.sxx * m.syy);
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const Moments m = centered_moments(x, y);
  return m.sxy / m.sxx;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

std::pair<double, double> normal_interval(double value, double se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("interval level must lie in (0, 1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  return {value - z * se, value + z * se};
}

WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("welch_test: need >= 2 values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sd(a) * sd(a) / na;
  const double vb = sd(b) * sd(b) / nb;
  WelchResult out;
  if (va + vb == 0.0) {
    out.p_value = mean(a) == mean(b) ? 1.0 : 0.0;
    return out;
  }
  out.statistic = (mean(a) - mean(b)) / std::sqrt(va + vb);
  out.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t_distribution<double> t(out.dof);
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(t, std::abs(out.statistic)));
  return out;
}

}  // namespace spconf
