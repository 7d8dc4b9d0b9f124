#include "pcv/pricing.hpp"

#include <cmath>
#include <sstream>

namespace pcv {

namespace {

constexpr double kVarianceFloor = 1e-14;

std::size_t idx(int s, int t) { return static_cast<std::size_t>(s - t - 1); }

// Expected payoff of a call/put on e^X, falling back to the intrinsic value
// when the variance is negligible.
CallPut call_put_or_intrinsic(double mu, double var, double K, bool warn_on_degenerate) {
  if (var < kVarianceFloor) {
    if (warn_on_degenerate)
      warn("option variance below 1e-14; using intrinsic value of the mean log price");
    const double f = std::exp(mu);
    return {std::max(f - K, 0.0), std::max(K - f, 0.0)};
  }
  return lognormal_call_put(mu, var, K);
}

}  // namespace

CallPut lognormal_call_put(double mu, double var, double K) {
  if (!(var > 0.0)) throw DegenerateVariance("lognormal_call_put: variance must be positive");
  if (!(K > 0.0)) throw DomainError("lognormal_call_put: strike must be positive");
  const double sd = std::sqrt(var);
  const double d1 = (mu + var - std::log(K)) / sd;
  const double d2 = d1 - sd;
  const double fwd = std::exp(mu + 0.5 * var);
  return {fwd * norm_cdf(d1) - K * norm_cdf(d2), K * norm_cdf(-d2) - fwd * norm_cdf(-d1)};
}

PathLaw::PathLaw(const MeasureSystem& sys, const PanelData& data, const StateBelief& belief,
                 int horizon)
    : t_(belief.t), H_(horizon), d_(sys.dims) {
  const int n = d_.n, ell = d_.ell, p = d_.p, nt = d_.n_tilde();
  if (t_ < 0 || H_ <= t_ || H_ > sys.T())
    throw Error("PathLaw: need 0 <= t < horizon <= T");
  if (t_ > data.last_observed()) throw Error("PathLaw: belief time beyond observed data");
  if (belief.mean.size() != 2 * n) throw DimensionError("PathLaw: belief has wrong size");

  basis_ = 2 * n + static_cast<Eigen::Index>(nt) * (H_ - t_);
  r_next_ = data.z_star(t_)(0);
  log_book_t_ = data.log_book(t_);
  log_discount_t_ = data.log_discount(t_);
  const Mat Fxi = psd_factor(sys.Sigma_xi);

  Vec zs = data.z_star(t_);
  Mat zs_load = Mat::Zero(ell * p, basis_);
  Vec ms = belief.mean;
  Mat ms_load = Mat::Zero(2 * n, basis_);
  ms_load.leftCols(2 * n) = psd_factor(belief.cov);

  m_mean_ = ms.head(n);
  m_loading_ = ms_load.topRows(n);

  Vec cb = Vec::Zero(n);
  Mat cb_load = Mat::Zero(n, basis_);
  double cr = 0.0;
  Vec cr_load = Vec::Zero(basis_);
  rs_mean_.push_back(0.0);
  rs_load_.push_back(cr_load.transpose());

  for (int s = t_ + 1; s <= H_; ++s) {
    const Eigen::Index col = 2 * n + static_cast<Eigen::Index>(nt) * (s - t_ - 1);
    Mat xi_load = Mat::Zero(nt, basis_);
    xi_load.middleCols(col, nt) = Fxi;
    if (s == t_ + 1) u_next_loading_ = xi_load.topRows(n);

    // z_s and its lag stack
    const Vec z = sys.nu_z.row(s - 1).transpose() + sys.A * zs;
    const Mat z_load = sys.A * zs_load + xi_load.middleRows(n, ell);
    Vec b = sys.nu_b.row(s - 1).transpose() + sys.E_at(s) * zs;
    Mat b_load = sys.E_at(s) * zs_load;
    if (p > 1) {
      zs.tail(ell * (p - 1)) = zs.head(ell * (p - 1)).eval();
      zs_load.bottomRows(ell * (p - 1)) = zs_load.topRows(ell * (p - 1)).eval();
    }
    zs.head(ell) = z;
    zs_load.topRows(ell) = z_load;

    // m*_s
    const Vec m = sys.nu_m.row(s - 1).transpose() + ms.head(n);
    const Mat m_load = ms_load.topRows(n) + xi_load.bottomRows(n);
    ms.tail(n) = ms.head(n).eval();
    ms_load.bottomRows(n) = ms_load.topRows(n).eval();
    ms.head(n) = m;
    ms_load.topRows(n) = m_load;

    // b_s
    const Vec g = sys.G_at(s);
    b += sys.Psi_b_at(s) * ms;
    b_load += sys.Psi_b_at(s) * ms_load + g.asDiagonal() * xi_load.topRows(n);

    Vec x(nt);
    x << b, z, m;
    Mat xl(nt, basis_);
    xl << b_load, z_load, m_load;
    x_mean_.push_back(x);
    x_load_.push_back(xl);

    cb += b;
    cb_load += b_load;
    lp_mean_.push_back(m + cb + log_book_t_);
    lp_load_.push_back(m_load + cb_load);

    cr += z(0);
    cr_load += z_load.row(0).transpose();
    rs_mean_.push_back(cr);
    rs_load_.push_back(cr_load.transpose());
  }
}

const Vec& PathLaw::x_mean(int s) const { return x_mean_.at(idx(s, t_)); }
const Mat& PathLaw::x_loading(int s) const { return x_load_.at(idx(s, t_)); }
Mat PathLaw::x_cov(int s1, int s2) const { return x_loading(s1) * x_loading(s2).transpose(); }
const Vec& PathLaw::log_price_mean(int k) const { return lp_mean_.at(idx(k, t_)); }
const Mat& PathLaw::log_price_loading(int k) const { return lp_load_.at(idx(k, t_)); }

double PathLaw::rate_sum_mean(int s) const {
  if (s < t_ || s > H_) throw Error("PathLaw: rate sum index out of range");
  return rs_mean_[static_cast<std::size_t>(s - t_)];
}

const Mat& PathLaw::rate_sum_loading(int s) const {
  if (s < t_ || s > H_) throw Error("PathLaw: rate sum index out of range");
  return rs_load_[static_cast<std::size_t>(s - t_)];
}

Vec PathLaw::m_mean() const { return m_mean_; }
Mat PathLaw::m_loading() const { return m_loading_; }
Mat PathLaw::u_next_loading() const { return u_next_loading_; }

double PathLaw::bond(int u) const {
  if (u <= t_ || u > H_) throw Error("PathLaw::bond: need t < u <= horizon");
  const Mat& w = rate_sum_loading(u - 1);
  return std::exp(-r_next_ - rate_sum_mean(u - 1) + 0.5 * w.squaredNorm());
}

Vec PathLaw::forward_mean(const Vec& mean, const Mat& loading, int u) const {
  if (u <= t_ || u > H_) throw Error("PathLaw::forward_mean: need t < u <= horizon");
  return mean - loading * rate_sum_loading(u - 1).transpose();
}

ForwardShift forward_shift(const MeasureSystem& rn_sys, const PathLaw& law, int u) {
  const int t = law.t(), H = law.horizon(), n = law.dims().n, nt = law.dims().n_tilde();
  if (u <= t || u > H) throw Error("forward_shift: need t < u <= horizon");
  ForwardShift fs;
  fs.t = t;
  fs.u = u;
  for (int s = t + 1; s <= H; ++s)
    fs.shifted_mean.push_back(law.forward_mean(law.x_mean(s), law.x_loading(s), u));
  const Mat Fxi = psd_factor(rn_sys.Sigma_xi);
  const Mat& w = law.rate_sum_loading(u - 1);
  for (int beta = t + 1; beta <= rn_sys.T(); ++beta) {
    if (beta > H) {
      fs.c_hat.push_back(Vec::Zero(nt));
      continue;
    }
    const Eigen::Index col = 2 * n + static_cast<Eigen::Index>(nt) * (beta - t - 1);
    fs.c_hat.push_back(Fxi * w.middleCols(col, nt).transpose());
  }
  fs.a_hat = -0.5 * rn_sys.Sigma_xi.diagonal().head(n) - fs.c_hat.front().head(n);
  return fs;
}

MeasureSystem forward_system(const MeasureSystem& rn_sys, const ForwardShift& shift) {
  MeasureSystem f = rn_sys;
  f.measure = MeasureSpec::forward(shift.t, shift.u);
  const int n = rn_sys.dims.n, ell = rn_sys.dims.ell;
  for (int beta = shift.t + 1; beta <= rn_sys.T(); ++beta) {
    const Vec& c = shift.c_hat[idx(beta, shift.t)];
    f.nu_b.row(beta - 1) -= rn_sys.G_at(beta).cwiseProduct(c.head(n)).transpose();
    f.nu_z.row(beta - 1) -= c.segment(n, ell).transpose();
    f.nu_m.row(beta - 1) -= c.tail(n).transpose();
  }
  return f;
}

double bond_price(const PathLaw& law, int u) { return law.bond(u); }

TerminalLogPriceDist terminal_log_price_dist(const PathLaw& law, int k, int u) {
  TerminalLogPriceDist out;
  out.k = k;
  out.t = law.t();
  out.u = u;
  const Mat& w = law.log_price_loading(k);
  out.mean = law.forward_mean(law.log_price_mean(k), w, u);
  out.cov = symmetrize(w * w.transpose());
  return out;
}

Vec option_price(OptionKind kind, const Vec& K, int maturity, const PathLaw& law) {
  const TerminalLogPriceDist dist = terminal_log_price_dist(law, maturity, maturity);
  const double B = law.bond(maturity);
  const int n = law.dims().n;
  if (K.size() != n) throw DimensionError("option_price: strike has wrong size");
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const CallPut cp = call_put_or_intrinsic(dist.mean(i), dist.cov(i, i), K(i), true);
    out(i) = B * (kind == OptionKind::Call ? cp.call : cp.put);
  }
  return out;
}

Vec option_value_at_expiry(OptionKind kind, const Vec& K, const PanelData& data,
                           const StateBelief& belief) {
  const Vec mu = belief.m() + data.log_book(belief.t);
  const Mat S = belief.m_cov();
  Vec out(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const CallPut cp = call_put_or_intrinsic(mu(i), S(i, i), K(i), false);
    out(i) = kind == OptionKind::Call ? cp.call : cp.put;
  }
  return out;
}

void LifeTable::set(int age, int duration, double tpx) {
  if (duration < 0 || !(tpx >= 0.0 && tpx <= 1.0))
    throw DomainError("LifeTable: survival probability must lie in [0,1]");
  table_[{age, duration}] = tpx;
}

double LifeTable::survival(int age, int duration) const {
  if (duration == 0) return 1.0;
  if (auto it = table_.find({age, duration}); it != table_.end()) return it->second;
  double p = 1.0;
  for (int j = 0; j < duration; ++j) {
    auto it = table_.find({age + j, 1});
    if (it == table_.end()) {
      std::ostringstream os;
      os << "incomplete life table: no entry for age " << age + j << " duration 1";
      throw DomainError(os.str());
    }
    p *= it->second;
  }
  return p;
}

double LifeTable::deferred_death(int age, int t, int k) const {
  return survival(age + t, k - t) * death(age + k);
}

std::string to_string(InsuranceProduct p) {
  switch (p) {
    case InsuranceProduct::SegregatedTerm:
      return "seg-term";
    case InsuranceProduct::SegregatedEndowment:
      return "seg-endow";
    case InsuranceProduct::UnitLinkedTerm:
      return "ul-term";
    case InsuranceProduct::UnitLinkedEndowment:
      return "ul-endow";
  }
  return "?";
}

InsuranceProduct insurance_product_from_string(const std::string& s) {
  for (auto p : {InsuranceProduct::SegregatedTerm, InsuranceProduct::SegregatedEndowment,
                 InsuranceProduct::UnitLinkedTerm, InsuranceProduct::UnitLinkedEndowment})
    if (to_string(p) == s) return p;
  throw Error("unknown insurance product '" + s + "'");
}

InsuranceSpec InsuranceSpec::constant(InsuranceProduct product, const Vec& F, const Vec& G,
                                      int age, int maturity) {
  InsuranceSpec s;
  s.product = product;
  s.age = age;
  s.maturity = maturity;
  s.F_star.assign(static_cast<std::size_t>(maturity), F);
  s.G_star.assign(static_cast<std::size_t>(maturity), G);
  return s;
}

namespace {

// Time-t value of the benefit paid at k for one company, before mortality weights.
double benefit_value(bool unit_linked, double F, double G, double mu, double var, double B) {
  if (F == 0.0) return B * G;
  const CallPut cp = call_put_or_intrinsic(mu, var, G / F, true);
  return unit_linked ? B * (F * cp.call + G) : B * F * cp.put;
}

}  // namespace

Vec insurance_premium(const InsuranceSpec& spec, const LifeTable& table, const PathLaw& law) {
  const int t = law.t(), T = spec.maturity, n = law.dims().n;
  if (T <= t || T > law.horizon()) throw Error("insurance_premium: need t < maturity <= horizon");
  if (static_cast<int>(spec.F_star.size()) < T || static_cast<int>(spec.G_star.size()) < T)
    throw DimensionError("insurance_premium: F* and G* must cover every year to maturity");
  const bool ul = spec.product == InsuranceProduct::UnitLinkedTerm ||
                  spec.product == InsuranceProduct::UnitLinkedEndowment;
  const bool term = spec.product == InsuranceProduct::SegregatedTerm ||
                    spec.product == InsuranceProduct::UnitLinkedTerm;

  auto value_at = [&](int k) {
    const TerminalLogPriceDist dist = terminal_log_price_dist(law, k, k);
    const double B = law.bond(k);
    Vec v(n);
    for (int i = 0; i < n; ++i)
      v(i) = benefit_value(ul, spec.F(k)(i), spec.G(k)(i), dist.mean(i), dist.cov(i, i), B);
    return v;
  };

  Vec out = Vec::Zero(n);
  if (term) {
    for (int k = t; k < T; ++k) {
      const double w = table.deferred_death(spec.age, t, k);
      if (w != 0.0) out += w * value_at(k + 1);
    }
  } else {
    out = table.survival(spec.age + t, T - t) * value_at(T);
  }
  return out;
}

}  // namespace pcv
