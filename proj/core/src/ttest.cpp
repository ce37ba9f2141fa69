#include "mesc/eval/ttest.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mesc::eval {

std::string ttest_kind_name(TTestKind k) {
  return k == TTestKind::welch ? "welch" : "student";
}

TTestKind ttest_kind_from_name(const std::string& name) {
  if (name == "welch") return TTestKind::welch;
  if (name == "student") return TTestKind::student;
  throw std::invalid_argument("unknown t-test kind: " + name);
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // sample variance, n-1 denominator
  size_t n = 0;
};

Moments moments(const std::vector<double>& xs, const char* which) {
  if (xs.size() < 2)
    throw std::invalid_argument(std::string("significance_test: sample ") + which +
                                " needs at least 2 values");
  Moments m;
  m.n = xs.size();
  for (double x : xs) {
    if (!std::isfinite(x))
      throw std::invalid_argument(
          std::string("significance_test: non-finite value in sample ") + which);
    m.mean += x;
  }
  m.mean /= static_cast<double>(m.n);
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(m.n - 1);
  return m;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw std::invalid_argument("regularized_incomplete_beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

TTestResult significance_test(const std::vector<double>& a,
                              const std::vector<double>& b, TTestKind kind) {
  const Moments ma = moments(a, "a");
  const Moments mb = moments(b, "b");
  const double na = static_cast<double>(ma.n), nb = static_cast<double>(mb.n);

  TTestResult result;
  double se2 = 0.0;
  if (kind == TTestKind::welch) {
    const double ua = ma.var / na, ub = mb.var / nb;
    se2 = ua + ub;
    if (se2 > 0.0)
      result.df = se2 * se2 /
                  (ua * ua / (na - 1.0) + ub * ub / (nb - 1.0));
  } else {
    const double pooled =
        ((na - 1.0) * ma.var + (nb - 1.0) * mb.var) / (na + nb - 2.0);
    se2 = pooled * (1.0 / na + 1.0 / nb);
    result.df = na + nb - 2.0;
  }

  if (se2 == 0.0) {
    result.df = na + nb - 2.0;
    if (ma.mean == mb.mean) {
      result.t = 0.0;
      result.p = 1.0;
    } else {
      result.t = ma.mean > mb.mean ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
      result.p = 0.0;
    }
    result.significant = result.p < 0.05;
    return result;
  }

  result.t = (ma.mean - mb.mean) / std::sqrt(se2);
  const double t2 = result.t * result.t;
  result.p =
      regularized_incomplete_beta(result.df / 2.0, 0.5, result.df / (result.df + t2));
  result.significant = result.p < 0.05;
  return result;
}

}  // namespace mesc::eval
