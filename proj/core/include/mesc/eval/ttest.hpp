#pragma once

#include <string>
#include <vector>

namespace mesc::eval {

enum class TTestKind { welch, student };

std::string ttest_kind_name(TTestKind k);
TTestKind ttest_kind_from_name(const std::string& name);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
  bool significant = false;  // p < 0.05
};

// Regularized incomplete beta I_x(a, b), evaluated by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sample t-test; Welch (unequal variance, Welch-Satterthwaite df) by
// default, pooled-variance Student selectable. Both samples constant and
// equal: t=0, p=1. Both constant but different: p=0.
TTestResult significance_test(const std::vector<double>& a,
                              const std::vector<double>& b,
                              TTestKind kind = TTestKind::welch);

}  // namespace mesc::eval
