#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Core>

namespace dstt {

// Philox4x32-10 counter-based generator. Draws depend only on (key, stream,
// position), so results are reproducible across platforms and independent of
// which thread consumes a stream first. Distinct streams use distinct high
// counter words under the same key.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        ctr_hi_(stream) {}

  std::uint32_t next_u32() {
    if (idx_ == 4) refill();
    return out_[idx_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on the open interval (0, 1); never returns an exact endpoint.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // Standard normal via Box-Muller. std::normal_distribution is not
  // byte-stable across standard libraries, this is.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  // Uniform direction on the unit sphere (normalized standard normal).
  Eigen::VectorXd unit_vector(int n) {
    Eigen::VectorXd z = normal_vector(n);
    double nz = z.norm();
    while (nz < 1e-12) {  // astronomically unlikely
      z = normal_vector(n);
      nz = z.norm();
    }
    return z / nz;
  }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo_);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi_);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi_ >> 32);
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
    ++ctr_lo_;
    idx_ = 0;
  }

  std::uint32_t key0_, key1_;
  std::uint64_t ctr_hi_;
  std::uint64_t ctr_lo_ = 0;
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int idx_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Packs small (purpose, index) pairs into a stream id so every epoch or
// sample batch gets an independent, thread-order-free stream.
inline std::uint64_t rng_stream(std::uint32_t purpose, std::uint32_t index) {
  return (static_cast<std::uint64_t>(purpose) << 32) | index;
}

}  // namespace dstt
