#pragma once

// Reference two-sided t-distribution tail probability by adaptive Simpson
// quadrature of the density (with a 1/x substitution for the unbounded tail),
// independent of the incomplete-beta route used by the implementation.

#include <cmath>
#include <functional>

namespace mesc::test {

namespace ttest_detail {

inline double t_density(double x, double df) {
  const double log_c = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                       0.5 * std::log(df * M_PI);
  return std::exp(log_c - (df + 1.0) / 2.0 * std::log1p(x * x / df));
}

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb, double whole, double tol,
                      int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 25);
}

}  // namespace ttest_detail

// P(|T| >= |t|) for T ~ student-t with `df` degrees of freedom.
inline double two_sided_p_oracle(double t, double df) {
  using namespace ttest_detail;
  const double T = std::fabs(t);
  if (T == 0.0) return 1.0;
  if (std::isinf(T)) return 0.0;
  auto dens = [df](double x) { return t_density(x, df); };
  double tail = 0.0;
  if (T < 1.0) {
    tail += integrate(dens, T, 1.0, 1e-12);
    tail += integrate([&](double y) { return dens(1.0 / y) / (y * y); }, 1e-9, 1.0,
                      1e-12);
  } else {
    tail += integrate([&](double y) { return dens(1.0 / y) / (y * y); }, 1e-9,
                      1.0 / T, 1e-12);
  }
  return 2.0 * tail;
}

}  // namespace mesc::test
