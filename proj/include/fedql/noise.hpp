#pragma once

#include <cstdint>
#include <random>

namespace fedql {

/// Deterministic random stream: one (seed, stream) pair yields one fixed
/// sequence, so executions replay bit-for-bit. Uniforms are derived from raw
/// mt19937_64 output instead of std::uniform_real_distribution, whose mapping
/// is implementation-defined.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream);

  /// Uniform double in (0, 1], 53-bit resolution, never exactly 0.
  double next_unit();

 private:
  std::mt19937_64 engine_;
};

/// Discrete two-sided geometric noise shifted so the draw is almost surely
/// at least the sensitivity, making overestimates all but certain:
///   Pr[eta = x] = p * exp(-(epsilon/sens) * |x - center|),  x in Z
///   p = (e^(epsilon/sens) - 1) / (e^(epsilon/sens) + 1)
/// The real-valued center -sens*ln((e^(eps/sens)+1)*delta)/eps + sens is
/// rounded up to the next integer and clamped to >= sens; rounding up only
/// shrinks the below-sensitivity tail, so Pr[eta < sens] <= delta still holds
/// and the integer center lets the pmf normalize exactly.
class TruncLaplace {
 public:
  TruncLaplace(double epsilon, double delta, uint64_t sensitivity);

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  uint64_t sensitivity() const { return sensitivity_; }
  int64_t center() const { return center_; }
  double center_real() const { return center_real_; }  // before rounding
  double weight() const { return p_; }                 // p
  double scale_ratio() const { return lambda_; }       // epsilon / sensitivity

  double pmf(int64_t x) const;

  /// Exact mass Pr[eta < threshold], closed-form geometric series.
  double tail_below(int64_t threshold) const;

  /// E[max(eta, 0)] in closed form: center plus the truncation correction
  /// p * beta^(center+1) / (1 - beta)^2.
  double mean() const;

  /// Series evaluation of E[max(eta, 0)] over a window wide enough that the
  /// neglected mass is below 1e-12. Cross-check for mean().
  double mean_by_series() const;

  /// Draws max(eta, 0). Mixture sampler with no rejection loop: emit the
  /// center with probability p, otherwise add a geometric magnitude >= 1
  /// with a fair sign.
  uint64_t sample(RngStream &rng) const;

 private:
  double epsilon_;
  double delta_;
  uint64_t sensitivity_;
  double lambda_;       // epsilon / sensitivity
  double beta_;         // exp(-lambda)
  double p_;            // (1 - beta) / (1 + beta)
  double center_real_;  // analytic center before rounding
  int64_t center_;      // ceil(center_real), clamped to >= sensitivity
};

/// Continuous Laplace mechanism for the query output (policy 2). Noise scale
/// is sensitivity / epsilon0. The joint multiparty generation is simulated
/// centrally.
double laplace_output(double value, double epsilon0, uint64_t sensitivity, RngStream &rng);

}  // namespace fedql
