#pragma once

// Euler-Maruyama ensemble for the classical Langevin counterpart
//   dx = (p/m) dt,  dp = -(m omega^2 x + 2 gamma p) dt + sqrt(4 m gamma kBT) dW.
//
// Random numbers come from Philox4x32-10 keyed by the seed, with the
// trajectory index and a per-trajectory block counter as the counter. Normals
// use the 128-layer ziggurat. Each trajectory owns a fixed stream, so results
// do not depend on how trajectories are scheduled.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <span>
#include <sstream>
#include <thread>
#include <vector>

#include "qbo/closed_form.hpp"
#include "qbo/error.hpp"
#include "qbo/model.hpp"

namespace qbo {

namespace rng {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const {
    Key key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9;
      key[1] += 0xBB67AE85;
    }
    return ctr;
  }

 private:
  Key key_;
};

namespace detail {

// Marsaglia-Tsang ziggurat tables, 128 layers, 25-bit signed draws.
struct ZigguratTables {
  std::array<std::uint32_t, 128> k{};
  std::array<double, 128> w{};
  std::array<double, 128> f{};

  ZigguratTables() {
    constexpr double m = 16777216.0;  // 2^24
    double dn = 3.442619855899;
    double tn = dn;
    constexpr double vn = 9.91256303526217e-3;
    const double q = vn / std::exp(-0.5 * dn * dn);
    k[0] = static_cast<std::uint32_t>((dn / q) * m);
    k[1] = 0;
    w[0] = q / m;
    w[127] = dn / m;
    f[0] = 1.0;
    f[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      k[static_cast<std::size_t>(i + 1)] = static_cast<std::uint32_t>((dn / tn) * m);
      tn = dn;
      f[static_cast<std::size_t>(i)] = std::exp(-0.5 * dn * dn);
      w[static_cast<std::size_t>(i)] = dn / m;
    }
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// Sequential draws from one trajectory's stream: counter (block, stream).
class NormalStream {
 public:
  NormalStream(const Philox4x32& gen, std::uint64_t stream) : gen_(&gen), stream_(stream) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  /// Uniform on (0, 1).
  double next_uniform() { return (static_cast<double>(next_u32()) + 0.5) * 0x1.0p-32; }

  double next_normal() {
    const auto& z = detail::ziggurat();
    for (;;) {
      const std::uint32_t word = next_u32();
      const std::size_t iz = word & 127u;
      const std::int32_t hz = static_cast<std::int32_t>(word) >> 7;
      const std::uint32_t mag = hz < 0 ? static_cast<std::uint32_t>(-static_cast<std::int64_t>(hz))
                                       : static_cast<std::uint32_t>(hz);
      const double x = hz * z.w[iz];
      if (mag < z.k[iz]) return x;
      if (iz == 0) {
        constexpr double r = 3.442619855899;
        double tx = 0.0;
        double ty = 0.0;
        do {
          tx = -std::log(next_uniform()) / r;
          ty = -std::log(next_uniform());
        } while (ty + ty < tx * tx);
        return hz > 0 ? r + tx : -r - tx;
      }
      if (z.f[iz] + next_uniform() * (z.f[iz - 1] - z.f[iz]) < std::exp(-0.5 * x * x)) return x;
    }
  }

 private:
  void refill() {
    buffer_ = (*gen_)({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                       static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)});
    ++block_;
    pos_ = 0;
  }

  const Philox4x32* gen_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  std::size_t pos_ = 4;
};

}  // namespace rng

struct EnsembleSpec {
  long n_traj = 100'000;
  double dt = 1e-3;
  double t_end = 10.0;
  std::uint64_t seed = 0;
  QuadraticState init{};
  bool allow_large_dt = false;
  unsigned threads = 1;  ///< 0 uses every hardware thread

  /// Step limit dt <= 0.05 min(1/gamma, 1/omega).
  static double max_dt(const OscillatorParams& p) {
    double rate = std::max(p.gamma, p.omega);
    return rate > 0.0 ? 0.05 / rate : std::numeric_limits<double>::infinity();
  }

  void validate(const OscillatorParams& p, std::ostream* warn = &std::clog) const {
    if (n_traj < 1) throw Error(ErrorCode::InvalidSpec, "n_traj must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidSpec, "dt must be positive and finite");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorCode::InvalidSpec, "t_end must be >= 0");
    if (dt > max_dt(p)) {
      std::ostringstream msg;
      msg << "dt = " << dt << " exceeds 0.05*min(1/gamma, 1/omega) = " << max_dt(p);
      if (!allow_large_dt) throw Error(ErrorCode::InvalidSpec, msg.str());
      if (warn) *warn << "warning: " << msg.str() << '\n';
    }
  }
};

/// Empirical moments at one sample time with standard errors of the mean.
struct EnsembleMoments {
  double t = 0.0;
  double mean_x = 0.0, mean_p = 0.0, var_x = 0.0, var_p = 0.0, sigma = 0.0, x4 = 0.0;
  double se_mean_x = 0.0, se_mean_p = 0.0, se_var_x = 0.0, se_var_p = 0.0, se_sigma = 0.0, se_x4 = 0.0;
  double kurtosis() const { return x4 / (var_x * var_x); }
};

struct EnsembleResult {
  std::vector<EnsembleMoments> samples;
  long n_traj = 0;
  long steps = 0;
};

namespace detail {

inline constexpr double kOverflowGuard = 1e150;
inline constexpr std::size_t kBlockSize = 1024;

// Power sums of (dx, dp) about the noiseless mean: dx^k for k <= 8 and the
// mixed terms needed for the covariance and its error.
struct PowerSums {
  std::array<double, 9> x{};  // sum dx^k
  std::array<double, 5> p{};  // sum dp^k
  double xp = 0.0, x2p = 0.0, xp2 = 0.0, x2p2 = 0.0, x3p = 0.0, xp3 = 0.0;

  void add(double dx, double dp) {
    double xk = 1.0;
    for (double& s : x) {
      s += xk;
      xk *= dx;
    }
    double pk = 1.0;
    for (double& s : p) {
      s += pk;
      pk *= dp;
    }
    xp += dx * dp;
    x2p += dx * dx * dp;
    xp2 += dx * dp * dp;
    x2p2 += dx * dx * dp * dp;
    x3p += dx * dx * dx * dp;
    xp3 += dx * dp * dp * dp;
  }

  void merge(const PowerSums& o) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += o.x[k];
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += o.p[k];
    xp += o.xp;
    x2p += o.x2p;
    xp2 += o.xp2;
    x2p2 += o.x2p2;
    x3p += o.x3p;
    xp3 += o.xp3;
  }
};

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// k-th central moment from raw moments r[0..k] about an arbitrary shift.
inline double central_from_raw(std::span<const double> raw, int k) {
  const double mu = raw[1];
  double sum = 0.0;
  double pw = 1.0;
  for (int j = 0; j <= k; ++j) {
    sum += binom(k, j) * raw[static_cast<std::size_t>(k - j)] * pw;
    pw *= -mu;
  }
  return sum;
}

inline EnsembleMoments finish(double t, const PowerSums& s, double shift_x, double shift_p) {
  const double n = s.x[0];
  std::array<double, 9> rx{};
  for (std::size_t k = 0; k < rx.size(); ++k) rx[k] = s.x[k] / n;
  std::array<double, 5> rp{};
  for (std::size_t k = 0; k < rp.size(); ++k) rp[k] = s.p[k] / n;
  const double mx = rx[1], mp = rp[1];

  std::array<double, 9> cx{};
  for (int k = 0; k < 9; ++k) cx[static_cast<std::size_t>(k)] = central_from_raw(rx, k);
  std::array<double, 5> cp{};
  for (int k = 0; k < 5; ++k) cp[static_cast<std::size_t>(k)] = central_from_raw(rp, k);

  // Central mixed moments E[(x-mx)^i (p-mp)^j].
  const double c11 = s.xp / n - mx * mp;
  const double e22 = s.x2p2 / n - 2 * mp * s.x2p / n - 2 * mx * s.xp2 / n + mp * mp * rx[2] + mx * mx * rp[2] +
                     4 * mx * mp * s.xp / n - 3 * mx * mx * mp * mp;

  EnsembleMoments m;
  m.t = t;
  m.mean_x = shift_x + mx;
  m.mean_p = shift_p + mp;
  m.var_x = cx[2];
  m.var_p = cp[2];
  m.sigma = 2.0 * c11;
  m.x4 = cx[4];
  const double root_n = std::sqrt(n);
  auto se = [&](double variance) { return std::sqrt(std::max(variance, 0.0)) / root_n; };
  m.se_mean_x = se(cx[2]);
  m.se_mean_p = se(cp[2]);
  m.se_var_x = se(cx[4] - cx[2] * cx[2]);
  m.se_var_p = se(cp[4] - cp[2] * cp[2]);
  m.se_sigma = 2.0 * se(e22 - c11 * c11);
  // Delta method for the fourth central moment.
  m.se_x4 = se(cx[8] - cx[4] * cx[4] - 8.0 * cx[3] * cx[5] + 16.0 * cx[2] * cx[3] * cx[3]);
  return m;
}

}  // namespace detail

/// Simulates the ensemble and samples it at `sample_times` (each a multiple
/// of dt within 1e-9 relative, ascending, not beyond t_end).
inline EnsembleResult simulate(const OscillatorParams& params, const EnsembleSpec& spec,
                               std::span<const double> sample_times, std::ostream* warn = &std::clog) {
  spec.validate(params, warn);
  std::vector<long> sample_steps;
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    const double t = sample_times[i];
    if (!(t >= 0.0) || t > spec.t_end * (1.0 + 1e-12))
      throw Error(ErrorCode::InvalidGrid, "sample time outside [0, t_end]");
    const long k = std::lround(t / spec.dt);
    if (std::abs(static_cast<double>(k) * spec.dt - t) > 1e-9 * std::max(1.0, t))
      throw Error(ErrorCode::InvalidGrid, "sample time " + std::to_string(t) + " is not a multiple of dt");
    if (i > 0 && k <= sample_steps.back()) throw Error(ErrorCode::InvalidGrid, "sample times must be increasing");
    sample_steps.push_back(k);
  }
  const std::size_t n_samples = sample_steps.size();
  const long total_steps = n_samples ? sample_steps.back() : 0;

  // Noiseless mean path used as the accumulation shift.
  std::vector<double> shift_x(n_samples), shift_p(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(sample_steps[i]) * spec.dt;
    if (params.omega > 0.0 || params.gamma > 0.0 || t == 0.0) {
      const QuadraticState q = closed_form_second_moments(params, spec.init, t);
      shift_x[i] = q.mean_x;
      shift_p[i] = q.mean_p;
    } else {
      shift_x[i] = spec.init.mean_x + spec.init.mean_p / params.m * t;
      shift_p[i] = spec.init.mean_p;
    }
  }

  const double dt = spec.dt;
  const double inv_m = 1.0 / params.m;
  const double spring = params.m * params.omega * params.omega;
  const double friction = 2.0 * params.gamma;
  const double kick = std::sqrt(4.0 * params.m * params.gamma * params.kbt * dt);

  // Initial covariance factor, lower triangular.
  const double cov = 0.5 * spec.init.sigma;
  const double l11 = std::sqrt(std::max(spec.init.var_x, 0.0));
  const double l21 = l11 > 0.0 ? cov / l11 : 0.0;
  const double l22 = std::sqrt(std::max(spec.init.var_p - l21 * l21, 0.0));

  const rng::Philox4x32 gen(spec.seed);
  const auto n_traj = static_cast<std::size_t>(spec.n_traj);
  const std::size_t n_blocks = (n_traj + detail::kBlockSize - 1) / detail::kBlockSize;
  std::vector<std::vector<detail::PowerSums>> block_sums(n_blocks,
                                                         std::vector<detail::PowerSums>(n_samples));
  std::atomic<std::size_t> next_block{0};
  std::atomic<bool> failed{false};
  std::vector<std::string> failure(n_blocks);

  auto worker = [&] {
    for (;;) {
      const std::size_t blk = next_block.fetch_add(1);
      if (blk >= n_blocks || failed.load()) return;
      auto& sums = block_sums[blk];
      const std::size_t lo = blk * detail::kBlockSize;
      const std::size_t hi = std::min(n_traj, lo + detail::kBlockSize);
      for (std::size_t traj = lo; traj < hi; ++traj) {
        rng::NormalStream noise(gen, traj);
        const double z0 = noise.next_normal();
        const double z1 = noise.next_normal();
        double x = spec.init.mean_x + l11 * z0;
        double p = spec.init.mean_p + l21 * z0 + l22 * z1;
        std::size_t next = 0;
        for (long step = 0;; ++step) {
          while (next < n_samples && sample_steps[next] == step) {
            sums[next].add(x - shift_x[next], p - shift_p[next]);
            ++next;
          }
          if (step == total_steps) break;
          const double xn = x + p * inv_m * dt;
          p = p - (spring * x + friction * p) * dt + kick * noise.next_normal();
          x = xn;
          if (!(std::abs(x) < detail::kOverflowGuard && std::abs(p) < detail::kOverflowGuard)) {
            std::ostringstream msg;
            msg << "trajectory " << traj << " left the overflow guard at t = " << (step + 1) * dt << " (dt = " << dt
                << ", m = " << params.m << ", gamma = " << params.gamma << ", omega = " << params.omega
                << ", kbt = " << params.kbt << ")";
            failure[blk] = msg.str();
            failed.store(true);
            return;
          }
        }
      }
    }
  };

  unsigned threads = spec.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failed.load())
    for (const auto& f : failure)
      if (!f.empty()) throw Error(ErrorCode::UnstableStep, f);

  EnsembleResult result;
  result.n_traj = spec.n_traj;
  result.steps = total_steps;
  for (std::size_t i = 0; i < n_samples; ++i) {
    detail::PowerSums total;
    for (std::size_t b = 0; b < n_blocks; ++b) total.merge(block_sums[b][i]);
    result.samples.push_back(
        detail::finish(static_cast<double>(sample_steps[i]) * dt, total, shift_x[i], shift_p[i]));
  }
  return result;
}

}  // namespace qbo
