#pragma once

// Dose-response kernels P(D): probability of infection given expected dose D.
//
//   exponential    P(D) = 1 - exp(-theta D)              (theta pinned to 1)
//   beta-Poisson   P(D) = 1 - (1 + D/theta_2)^(-theta_1)  (theta_2 pinned to 1)
//
// Each kernel is a small struct evaluated on log-dose, which is what the
// quadrature loop produces and which keeps huge doses finite. Adding a model
// means adding one struct and one case in visit_kernel().

#include <cmath>
#include <optional>

#include "dare/core_data.hpp"

namespace dare {

// Kernel value and derivatives at a single log-dose.
struct KernelPoint {
  double prob = 0.0;        // P(D)
  double survival = 1.0;    // 1 - P(D), computed without cancellation
  double d_log_dose = 0.0;  // dP / d(log D)
  double d_theta1 = 0.0;    // dP / d(theta_1); zero when the kernel has none
};

struct ExponentialKernel {
  double log_theta = 0.0;

  KernelPoint at_log_dose(double log_dose) const {
    const double a = log_dose + log_theta;  // log(theta D)
    const double hazard = std::exp(a);
    KernelPoint k;
    k.survival = std::exp(-hazard);
    k.prob = -std::expm1(-hazard);
    k.d_log_dose = std::exp(a - hazard);
    return k;
  }
};

struct BetaPoissonKernel {
  double theta1 = 1.0;
  double log_theta2 = 0.0;

  KernelPoint at_log_dose(double log_dose) const {
    const double a = log_dose - log_theta2;  // log(D / theta_2)
    // log1p(e^a) without overflow for large a.
    const double l1p = a > 35.0 ? a + std::exp(-a) : std::log1p(std::exp(a));
    const double survival = std::exp(-theta1 * l1p);
    KernelPoint k;
    k.survival = survival;
    k.prob = -std::expm1(-theta1 * l1p);
    // D/(1+D) = logistic(a)
    const double frac = 1.0 / (1.0 + std::exp(-a));
    k.d_log_dose = theta1 * frac * survival;
    k.d_theta1 = l1p * survival;
    return k;
  }
};

template <typename F>
decltype(auto) visit_kernel(const DoseResponseSpec& spec, std::optional<double> theta1, F&& f) {
  switch (spec.kernel) {
    case Kernel::Exponential:
      return f(ExponentialKernel{std::log(spec.fixed_value)});
    case Kernel::BetaPoisson:
      return f(BetaPoissonKernel{theta1.value_or(1.0), std::log(spec.fixed_value)});
  }
  return f(ExponentialKernel{std::log(spec.fixed_value)});
}

// P(dose). theta1 must be given iff the kernel is beta-Poisson.
double response_prob(const DoseResponseSpec& spec, std::optional<double> theta1, double dose);

struct ResponsePartials {
  double d_dose = 0.0;
  std::optional<double> d_theta1;
};

ResponsePartials response_prob_partials(const DoseResponseSpec& spec, std::optional<double> theta1, double dose);

}  // namespace dare
