#include "pcv/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace pcv {

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

void NormalStream::refill() {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32),
                                static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32)};
  ++block_;
  const auto r = Philox4x32::block(ctr, key_);
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  cache_[0] = rad * std::cos(ang);
  cache_[1] = rad * std::sin(ang);
  avail_ = 2;
}

double NormalStream::next() {
  if (avail_ == 0) refill();
  return cache_[2 - avail_--];
}

void NormalStream::fill(Eigen::Ref<Vec> out) {
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = next();
}

Simulator::Simulator(const ModelSystems& ms, const MeasureSystem& sys, const StateBelief& start,
                     int horizon)
    : ms_(&ms), sys_(&sys), t0_(start.t), H_(horizon) {
  const ModelDims& d = sys.dims;
  if (t0_ < 0 || H_ < t0_ || H_ > sys.T()) throw Error("Simulator: need 0 <= t0 <= H <= T");
  if (t0_ > ms.data.last_observed()) throw Error("Simulator: start beyond observed data");
  normals_ = 2 * d.n + d.n_tilde() * (H_ - t0_);
  state_mean_ = start.mean;
  state_factor_ = psd_factor(start.cov);
  if (!is_psd(sys.Sigma_xi)) throw NumericalError("Simulator: Sigma_xi not PSD");
  xi_factor_ = psd_factor(sys.Sigma_xi);
}

void Simulator::generate(const Vec& eps, SimPath& p) const {
  const ModelDims& d = sys_->dims;
  const int n = d.n, ell = d.ell, lp = d.ell * d.p, nt = d.n_tilde();
  const PanelData& data = ms_->data;
  const int rows = H_ - t0_ + 1;
  p.t0 = t0_;
  p.H = H_;
  if (p.b.rows() != rows || p.b.cols() != n) {
    p.b.resize(rows, n);
    p.z.resize(rows, ell);
    p.m.resize(rows, n);
    p.log_book.resize(rows, n);
    p.log_discount.resize(rows);
  }
  const Vec ms0 = state_mean_ + state_factor_ * eps.head(2 * n);
  p.m.row(0) = ms0.head(n).transpose();
  p.m_before = ms0.tail(n);
  p.b.row(0) = t0_ >= 1 ? Vec(data.b(t0_)).transpose() : Vec(Vec::Zero(n)).transpose();
  Vec zlag = data.z_star(t0_);
  p.z.row(0) = zlag.head(ell).transpose();
  p.log_book.row(0) = data.log_book(t0_).transpose();
  p.log_discount(0) = data.log_discount(t0_);

  Vec xi(nt), zs(ell), mstar(2 * n), bs(n);
  for (int s = t0_ + 1; s <= H_; ++s) {
    const int r = s - t0_;
    xi.noalias() = xi_factor_ * eps.segment(2 * n + nt * (r - 1), nt);
    zs.noalias() = sys_->A * zlag;
    zs += sys_->nu_z.row(s - 1).transpose() + xi.segment(n, ell);
    mstar.head(n) = p.m.row(r - 1).transpose() + sys_->nu_m.row(s - 1).transpose() + xi.tail(n);
    mstar.tail(n) = p.m.row(r - 1).transpose();
    bs.noalias() = sys_->Psi_b_at(s) * mstar;
    bs.noalias() += sys_->E_at(s) * zlag;
    bs += sys_->nu_b.row(s - 1).transpose() + sys_->G_at(s).cwiseProduct(xi.head(n));
    // rate r_s = first entry of z_{s-1}
    p.log_discount(r) = p.log_discount(r - 1) - zlag(0);
    if (d.p > 1) zlag.tail(lp - ell) = zlag.head(lp - ell).eval();
    zlag.head(ell) = zs;
    p.z.row(r) = zs.transpose();
    p.m.row(r) = mstar.head(n).transpose();
    p.b.row(r) = bs.transpose();
    p.log_book.row(r) = p.log_book.row(r - 1) + bs.transpose();
  }
}

void Simulator::path(std::uint64_t seed, std::uint64_t index, bool negate, SimPath& out) const {
  Vec eps(normals_);
  NormalStream(seed, index).fill(eps);
  if (negate) eps = -eps;
  generate(eps, out);
}

Vec Simulator::gross_return(const SimPath& p, int s) const {
  const int n = sys_->dims.n;
  const PanelData& data = ms_->data;
  const Vec P = p.log_price(s);
  const Vec Pprev = p.log_price(s - 1);
  const Vec lb_prev = p.log_book.row(s - 1 - t0_).transpose();
  Vec k(n);
  for (int i = 0; i < n; ++i) {
    if (!data.pays(s, i)) {
      k(i) = P(i) - Pprev(i);
      continue;
    }
    const double dt = data.Delta(s)(i) +
                      (ms_->conv == DividendConvention::BookValue ? lb_prev(i) : Pprev(i));
    const double g = ms_->lin.g(s - 1, i), h = ms_->lin.h(s - 1, i);
    k(i) = (P(i) - dt + h) / g - Pprev(i) + dt;
  }
  return k.array().exp();
}

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("PCV_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

namespace {

constexpr std::uint64_t kChunk = 4096;

struct Moments {
  std::uint64_t n = 0;
  Vec mean;
  Vec m2;
};

Moments merge(const Moments& a, const Moments& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  Moments out;
  out.n = a.n + b.n;
  const Vec delta = b.mean - a.mean;
  const double fb = static_cast<double>(b.n) / static_cast<double>(out.n);
  out.mean = a.mean + fb * delta;
  out.m2 = a.m2 + b.m2 +
           delta.cwiseProduct(delta) * (static_cast<double>(a.n) * fb);
  return out;
}

// Pairwise reduction in index order, independent of how chunks were scheduled.
Moments reduce(std::vector<Moments>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(reduce(parts, lo, mid), reduce(parts, mid, hi));
}

template <class ChunkFn>
Estimate run_chunks(std::uint64_t n_units, Eigen::Index dim, ChunkFn&& chunk_fn) {
  if (n_units == 0) throw Error("estimate: need at least one sample");
  const std::uint64_t n_chunks = (n_units + kChunk - 1) / kChunk;
  std::vector<Moments> parts(n_chunks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    try {
      for (std::uint64_t c = next++; c < n_chunks && !failed; c = next++) {
        const std::uint64_t lo = c * kChunk, hi = std::min(n_units, lo + kChunk);
        Moments m;
        m.mean = Vec::Zero(dim);
        m.m2 = Vec::Zero(dim);
        Vec x(dim);
        for (std::uint64_t i = lo; i < hi; ++i) {
          chunk_fn(i, x);
          ++m.n;
          const Vec delta = x - m.mean;
          m.mean += delta / static_cast<double>(m.n);
          m.m2 += delta.cwiseProduct(x - m.mean);
        }
        parts[c] = std::move(m);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  const int workers = static_cast<int>(std::min<std::uint64_t>(worker_count(), n_chunks));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  const Moments total = reduce(parts, 0, parts.size());
  Estimate e;
  e.n = total.n;
  e.mean = total.mean;
  e.se = total.n > 1 ? Vec((total.m2 / static_cast<double>(total.n - 1) /
                            static_cast<double>(total.n))
                               .cwiseMax(0.0)
                               .cwiseSqrt())
                     : Vec::Zero(dim);
  return e;
}

}  // namespace

Estimate estimate(const Simulator& sim, const SimConfig& cfg, Eigen::Index dim,
                  const Payoff& payoff) {
  if (cfg.t_start != sim.t0() || cfg.horizon != sim.horizon())
    throw Error("estimate: config window does not match the simulator");
  const int nn = sim.normals_per_path();
  return run_chunks(cfg.n_paths, dim, [&](std::uint64_t i, Vec& x) {
    thread_local SimPath path;
    thread_local Vec eps, y;
    eps.resize(nn);
    NormalStream(cfg.seed, i).fill(eps);
    sim.generate(eps, path);
    payoff(path, x);
    if (cfg.antithetic) {
      y.resize(dim);
      eps = -eps;
      sim.generate(eps, path);
      payoff(path, y);
      x = 0.5 * (x + y);
    }
  });
}

Estimate estimate_draws(std::uint64_t n_draws, std::uint64_t seed, Eigen::Index dim,
                        const Sampler& sampler) {
  return run_chunks(n_draws, dim, [&](std::uint64_t i, Vec& x) {
    NormalStream ns(seed, i);
    sampler(ns, x);
  });
}

PathSet simulate(const Simulator& sim, const SimConfig& cfg) {
  PathSet set;
  set.config = cfg;
  const std::uint64_t total = cfg.antithetic ? 2 * cfg.n_paths : cfg.n_paths;
  set.paths.resize(total);
  for (std::uint64_t i = 0; i < cfg.n_paths; ++i) {
    if (cfg.antithetic) {
      sim.path(cfg.seed, i, false, set.paths[2 * i]);
      sim.path(cfg.seed, i, true, set.paths[2 * i + 1]);
    } else {
      sim.path(cfg.seed, i, false, set.paths[i]);
    }
  }
  return set;
}

}  // namespace pcv
