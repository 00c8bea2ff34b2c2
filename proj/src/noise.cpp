#include "fedql/noise.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedql {

namespace {

uint64_t splitmix64(uint64_t &state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr int64_t kCenterGuard = int64_t{1} << 62;

}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream) {
  uint64_t state = seed ^ (stream * 0xda942042e4dd58b5ULL);
  std::seed_seq seq{static_cast<uint32_t>(splitmix64(state)),
                    static_cast<uint32_t>(splitmix64(state) >> 32),
                    static_cast<uint32_t>(splitmix64(state)),
                    static_cast<uint32_t>(splitmix64(state) >> 32)};
  engine_.seed(seq);
}

double RngStream::next_unit() {
  // 53 high bits -> (0, 1]: add 1 before scaling so log() is always finite.
  uint64_t bits = engine_() >> 11;
  return static_cast<double>(bits + 1) * 0x1.0p-53;
}

TruncLaplace::TruncLaplace(double epsilon, double delta, uint64_t sensitivity)
    : epsilon_(epsilon), delta_(delta), sensitivity_(sensitivity) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("TruncLaplace: epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("TruncLaplace: delta must lie in (0, 1)");
  if (sensitivity < 1) throw std::invalid_argument("TruncLaplace: sensitivity must be >= 1");

  lambda_ = epsilon / static_cast<double>(sensitivity);
  beta_ = std::exp(-lambda_);
  p_ = (1.0 - beta_) / (1.0 + beta_);

  // center = -sens*ln((e^lambda + 1)*delta)/eps + sens, evaluated via
  // ln(e^lambda + 1) = lambda + log1p(e^-lambda) to stay finite for large
  // lambda.
  double sens = static_cast<double>(sensitivity);
  center_real_ = -sens * (lambda_ + std::log1p(beta_) + std::log(delta_)) / epsilon_ + sens;
  if (!(center_real_ < static_cast<double>(kCenterGuard)))
    throw std::invalid_argument("TruncLaplace: center overflows (epsilon too small for delta)");
  center_ = static_cast<int64_t>(std::ceil(center_real_));
  if (center_ < static_cast<int64_t>(sensitivity)) center_ = static_cast<int64_t>(sensitivity);

  if (tail_below(static_cast<int64_t>(sensitivity)) > delta_ * (1.0 + 1e-12))
    throw std::logic_error("TruncLaplace: tail mass below sensitivity exceeds delta");
}

double TruncLaplace::pmf(int64_t x) const {
  double d = std::abs(static_cast<double>(x - center_));
  return p_ * std::exp(-lambda_ * d);
}

double TruncLaplace::tail_below(int64_t threshold) const {
  if (threshold <= center_) {
    // sum_{x < t} p*beta^(c-x) = p * beta^(c-t+1) / (1-beta)
    double k = static_cast<double>(center_ - threshold) + 1.0;
    return p_ * std::exp(-lambda_ * k) / (1.0 - beta_);
  }
  double k = static_cast<double>(threshold - center_);
  return 1.0 - p_ * std::exp(-lambda_ * k) / (1.0 - beta_);
}

double TruncLaplace::mean() const {
  double c = static_cast<double>(center_);
  double one_minus_beta = 1.0 - beta_;
  double correction =
      p_ * std::exp(-lambda_ * (c + 1.0)) / (one_minus_beta * one_minus_beta);
  return c + correction;
}

double TruncLaplace::mean_by_series() const {
  // Window wide enough that the neglected tail's mean contribution
  // ~ (center + w) * p * beta^w / (1 - beta) stays well below 1e-12.
  double width = std::ceil(std::log(1e15 * p_ / (1.0 - beta_)) / lambda_) + 2.0;
  int64_t w = static_cast<int64_t>(std::max(width, 8.0));
  // compensated summation: the window can span thousands of terms
  double sum = 0.0, carry = 0.0;
  for (int64_t x = std::max<int64_t>(1, center_ - w); x <= center_ + w; ++x) {
    double term = static_cast<double>(x) * pmf(x) - carry;
    double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  return sum;
}

uint64_t TruncLaplace::sample(RngStream &rng) const {
  int64_t eta = center_;
  if (rng.next_unit() >= p_) {
    // Geometric magnitude >= 1: 1 + floor(ln(u)/ln(beta)) failures.
    double u = rng.next_unit();
    double m = 1.0 + std::floor(std::log(u) / std::log(beta_));
    if (m > 4e18) m = 4e18;  // defend int64 conversion for pathological draws
    int64_t magnitude = static_cast<int64_t>(m);
    if (magnitude < 1) magnitude = 1;
    bool negative = rng.next_unit() < 0.5;
    eta += negative ? -magnitude : magnitude;
  }
  return eta > 0 ? static_cast<uint64_t>(eta) : 0;
}

double laplace_output(double value, double epsilon0, uint64_t sensitivity, RngStream &rng) {
  if (!(epsilon0 > 0.0))
    throw std::invalid_argument("laplace_output: epsilon0 must be positive");
  double scale = static_cast<double>(sensitivity) / epsilon0;
  // Log-ratio of two unit uniforms is exactly Laplace(0, 1) and stays finite
  // because next_unit() never returns 0.
  double noise = scale * std::log(rng.next_unit() / rng.next_unit());
  return value + noise;
}

}  // namespace fedql
