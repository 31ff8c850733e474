#include "stabeval/toy.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

double standard_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) fail(ErrorCode::InvalidArgument, "normal quantile needs u in (0, 1)");
  // 1 - u is exact here, and the lower tail keeps full relative accuracy.
  if (u > 0.5) return -standard_normal_quantile(1.0 - u);
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - p_low) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
  const double g = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - g / (1.0 + x * g / 2.0);
}

Dataset generate_toy(std::uint64_t seed, std::size_t n_per_class, std::vector<double> mean_pos,
                     std::vector<double> mean_neg) {
  if (n_per_class < 1) fail(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  if (mean_pos.empty() || mean_pos.size() != mean_neg.size()) {
    fail(ErrorCode::DimensionMismatch, "class means must be nonempty and of equal length");
  }
  const std::size_t d = mean_pos.size();
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };

  Matrix x(2 * n_per_class, d);
  std::vector<int> labels(2 * n_per_class);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const bool positive = i >= n_per_class;
    const std::vector<double>& mu = positive ? mean_pos : mean_neg;
    labels[i] = positive ? 1 : -1;
    for (std::size_t j = 0; j < d; ++j) x(i, j) = mu[j] + standard_normal_quantile(uniform());
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset(std::move(x), std::move(labels), std::move(names));
}

LogisticModel fit_logistic(const Dataset& data, int epochs, double step) {
  if (epochs < 0 || !(step > 0.0)) fail(ErrorCode::InvalidArgument, "fit_logistic needs epochs >= 0 and step > 0");
  const std::size_t n = data.size();
  const std::size_t d = data.dimension();
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> coef(n);
  std::vector<double> column(n);
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = data.features().row(i);
      double m = b;
      for (std::size_t j = 0; j < d; ++j) m += w[j] * xi[j];
      const int y = data.labels()[i];
      // d/dm log(1 + exp(-y m)) = -y / (1 + exp(y m))
      const double t = y * m;
      coef[i] = t >= 0 ? -y * std::exp(-t) / (1.0 + std::exp(-t)) : -y / (1.0 + std::exp(t));
    }
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) column[i] = coef[i] * data.features()(i, j);
      w[j] -= step * numeric::mean(column);
    }
    b -= step * numeric::mean(coef);
  }
  return LogisticModel(std::move(w), b);
}

}  // namespace stabeval
