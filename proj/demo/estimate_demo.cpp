// Fits the penalized Pseudo-Huber estimator to a heavy-tailed sample and
// compares it with the population oracle and the sample mean.

#include <cstdio>

#include "pphuber/harness.hpp"

int main() {
  using namespace pphuber;

  const NoiseModel noise = parse_noise("student_t:df=2.5");
  const std::size_t n = 2000;
  const Sample y = sample(noise, 2.0, n, 10.0, 2024);

  EstimatorConfig config;  // delta = 0.05, z = 5 sqrt(log(100))
  const FitResult f = fit(y, config);
  const OracleSolution o = tau_star(noise, 2.0, n, config.z());

  std::printf("n            %zu\n", n);
  std::printf("z            %.6f\n", f.z);
  std::printf("mu_hat       %.6f  (true 10)\n", f.mu_hat);
  std::printf("sample mean  %.6f\n", sample_mean(y));
  std::printf("tau_hat      %.6f\n", f.tau_hat);
  std::printf("tau*         %.6f  (tau_hat / tau* = %.3f)\n", o.tau_star, f.tau_hat / o.tau_star);
  std::printf("iterations   %zu, converged %s\n", f.iterations, f.converged ? "yes" : "no");
  return f.converged ? 0 : 1;
}
