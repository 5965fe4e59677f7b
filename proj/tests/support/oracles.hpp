#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: tail-probability quadrature, the closed-form Gaussian KL
// divergence, and a two-sample Welch z-test.

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace oracles {

inline double normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-14) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return detail::adaptive(f, a, b, fa, fm, fb, detail::simpson(f, a, b, fa, fm, fb), tol, 48);
}

// Q(x) as the integral of the standard normal density from x to infinity;
// the tail beyond 40 sigma is below double resolution.
inline double q_by_quadrature(double x) {
  const double upper = std::max(x + 40.0, 40.0);
  return integrate([](double t) { return normal_pdf(t); }, x, upper);
}

// KL(N(mu1, s1^2) || N(mu2, s2^2))
inline double gaussian_kl(double mu1, double s1, double mu2, double s2) {
  return std::log(s2 / s1) + (s1 * s1 + (mu1 - mu2) * (mu1 - mu2)) / (2.0 * s2 * s2) - 0.5;
}

struct WelchResult {
  double z;
  bool distinguishable_1pct;  // |z| above the two-sided 1% critical value
};

inline WelchResult welch_z(std::span<const double> a, std::span<const double> b) {
  auto moments = [](std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    return std::pair{mean, var};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double se = std::sqrt(va / static_cast<double>(a.size()) + vb / static_cast<double>(b.size()));
  const double z = se > 0 ? (ma - mb) / se : 0.0;
  return {z, std::abs(z) >= 2.5758293035489004};
}

inline double mean(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

}  // namespace oracles
