#pragma once

#include "pcv/stacked.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace pcv {

// Philox4x32-10 counter-based generator.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter ctr, Key key);
};

// Standard normals for one (seed, stream) pair; stream i never overlaps stream j.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);
  double next();
  void fill(Eigen::Ref<Vec> out);

 private:
  void refill();
  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  double cache_[2] = {0.0, 0.0};
  int avail_ = 0;
};

struct SimConfig {
  MeasureSpec measure;
  std::uint64_t n_paths = 10000;
  std::uint64_t seed = 1;
  int t_start = 0;
  int horizon = 1;
  bool antithetic = true;
};

// One trajectory over s = t0..H; row s - t0 holds time s.
struct SimPath {
  int t0 = 0;
  int H = 0;
  Mat b;             // b_tilde (row 0: observed value at t0, zero when t0 = 0)
  Mat z;
  Mat m;
  Vec m_before;      // m_{t0-1}
  Mat log_book;      // ln B_s
  Vec log_discount;  // ln D_s

  int rows() const { return H - t0 + 1; }
  Vec log_price(int s) const { return (m.row(s - t0) + log_book.row(s - t0)).transpose(); }
  // D_s / D_t
  double discount(int t, int s) const { return std::exp(log_discount(s - t0) - log_discount(t - t0)); }
};

// Exact simulation of the linear system under one measure, started from a
// time-t0 belief (two-stage: draw the state, then the innovations).
class Simulator {
 public:
  Simulator(const ModelSystems& ms, const MeasureSystem& sys, const StateBelief& start,
            int horizon);

  int t0() const { return t0_; }
  int horizon() const { return H_; }
  int normals_per_path() const { return normals_; }
  const MeasureSystem& system() const { return *sys_; }

  void generate(const Vec& eps, SimPath& out) const;
  void path(std::uint64_t seed, std::uint64_t index, bool negate, SimPath& out) const;

  // Linearized gross return (P_s + d_s) / P_{s-1}, s in t0+1..H.
  Vec gross_return(const SimPath& p, int s) const;

 private:
  const ModelSystems* ms_;
  const MeasureSystem* sys_;
  int t0_;
  int H_;
  int normals_;
  Vec state_mean_;
  Mat state_factor_;
  Mat xi_factor_;
};

struct Estimate {
  Vec mean;
  Vec se;
  std::uint64_t n = 0;  // independent samples (antithetic pairs count once)
};

using Payoff = std::function<void(const SimPath&, Eigen::Ref<Vec>)>;

// Sample mean and standard error of a vector payoff. Antithetic pairs are
// averaged before the variance is taken. Results do not depend on the number
// of worker threads (PCV_THREADS caps it).
Estimate estimate(const Simulator& sim, const SimConfig& cfg, Eigen::Index dim,
                  const Payoff& payoff);

// Mean and standard error of an arbitrary sampler fed by one normal stream per draw.
using Sampler = std::function<void(NormalStream&, Eigen::Ref<Vec>)>;
Estimate estimate_draws(std::uint64_t n_draws, std::uint64_t seed, Eigen::Index dim,
                        const Sampler& sampler);

struct PathSet {
  SimConfig config;
  std::vector<SimPath> paths;
};

PathSet simulate(const Simulator& sim, const SimConfig& cfg);

int worker_count();

}  // namespace pcv
