#include "dare/dose_response.hpp"

#include <limits>

#include <fmt/format.h>

#include "dare/error.hpp"

namespace dare {
namespace {

void check_arguments(const DoseResponseSpec& spec, std::optional<double> theta1, double dose) {
  if (std::isnan(dose) || dose < 0.0) throw Error(fmt::format("dose must be non-negative (got {})", dose));
  if (spec.kernel == Kernel::BetaPoisson) {
    if (!theta1) throw Error("beta-Poisson kernel requires theta1");
    if (!(*theta1 > 0.0) || !std::isfinite(*theta1)) {
      throw Error(fmt::format("theta1 must be positive (got {})", *theta1));
    }
  } else if (theta1) {
    throw Error("exponential kernel takes no theta1");
  }
}

}  // namespace

double response_prob(const DoseResponseSpec& spec, std::optional<double> theta1, double dose) {
  check_arguments(spec, theta1, dose);
  if (dose == 0.0) return 0.0;
  return visit_kernel(spec, theta1, [&](const auto& k) { return k.at_log_dose(std::log(dose)).prob; });
}

ResponsePartials response_prob_partials(const DoseResponseSpec& spec, std::optional<double> theta1, double dose) {
  check_arguments(spec, theta1, dose);
  ResponsePartials out;
  const double fixed = spec.fixed_value;
  if (spec.kernel == Kernel::Exponential) {
    out.d_dose = fixed * std::exp(-fixed * dose);
    return out;
  }
  const double t1 = *theta1;
  const double l1p = std::log1p(dose / fixed);
  out.d_dose = t1 / fixed * std::exp(-(t1 + 1.0) * l1p);
  out.d_theta1 = l1p * std::exp(-t1 * l1p);
  return out;
}

}  // namespace dare
