#pragma once

// Seeded variate generation. Streams come from a Philox4x32-10 counter-based
// generator: the seed is the key, the stream id occupies the upper half of the
// 128-bit counter and the draw position the lower half, so two different
// (seed, stream) pairs never share a block.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "psinf/error.hpp"
#include "psinf/linalg.hpp"

namespace psinf {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 2) {
      refill();
      lane_ = 0;
    }
    const std::size_t i = 2 * lane_++;
    return (static_cast<std::uint64_t>(block_[i]) << 32) | block_[i + 1];
  }

  /// One keyed bijection of the counter, exposed for known-answer tests.
  static Counter encrypt(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t prod0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t prod1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(prod0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(prod0);
      const auto hi1 = static_cast<std::uint32_t>(prod1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(prod1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  void refill() {
    const Counter ctr{static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    block_ = encrypt(ctr, key_);
    ++position_;
  }

  Key key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  Counter block_{};
  std::size_t lane_ = 2;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Random state owned by exactly one thread of work.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_(stream_id), engine_(seed, stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  /// Fresh state on a stream derived from this one's (seed, stream_id) and k.
  /// Does not depend on how many draws this state has made.
  Rng substream(std::uint64_t k) const {
    return Rng(seed_, splitmix64(stream_ ^ splitmix64(k + 0x632BE59BD9B4E019ull)));
  }

  double normal() { return normal_(engine_); }

  double chi_square(double dof) {
    return 2.0 * gamma_(engine_, std::gamma_distribution<double>::param_type(0.5 * dof, 1.0));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  Philox4x32 engine_;
  std::normal_distribution<double> normal_;
  std::gamma_distribution<double> gamma_;
};

inline double draw_std_normal(Rng& rng) { return rng.normal(); }

inline double draw_chi_square(Rng& rng, long dof) {
  if (dof < 1) throw Error(ErrorCode::BadDof, "chi-square needs dof >= 1, got " + std::to_string(dof));
  return rng.chi_square(static_cast<double>(dof));
}

/// count rows, each mean + L z with z ~ N(0, I) and L the Cholesky factor of cov.
inline DataMatrix draw_mvn(Rng& rng, const Vector& mean, const SpdMatrix& cov, Eigen::Index count) {
  const Eigen::Index p = cov.dim();
  if (mean.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "mean has length " + std::to_string(mean.size()) +
                                                  ", covariance is " + std::to_string(p) + "x" +
                                                  std::to_string(p));
  }
  if (count < 1) throw Error(ErrorCode::TooFewRows, "draw_mvn needs count >= 1");
  DataMatrix z(count, p);
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  DataMatrix x = z * cov.chol().transpose();
  x.rowwise() += mean.transpose();
  return x;
}

/// Bartlett draw from W_p(dof, L L^T) given the lower factor L.
/// A(i,i) = sqrt(chi2(dof - i)) with 0-based i, standard normals below the
/// diagonal; W = (L A)(L A)^T.
inline Matrix draw_wishart_factor(Rng& rng, long dof, const Matrix& scale_chol) {
  const Eigen::Index p = scale_chol.rows();
  if (dof < p) {
    throw Error(ErrorCode::BadDof, "Wishart needs dof >= p, got dof = " + std::to_string(dof) +
                                       ", p = " + std::to_string(p));
  }
  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(static_cast<double>(dof - i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Matrix la = scale_chol.triangularView<Eigen::Lower>() * a;
  return la * la.transpose();
}

inline ScatterMatrix draw_wishart(Rng& rng, long dof, const SpdMatrix& scale) {
  return ScatterMatrix{draw_wishart_factor(rng, dof, scale.chol()), dof};
}

}  // namespace psinf
