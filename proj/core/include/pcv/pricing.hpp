#pragma once

#include "pcv/stacked.hpp"

#include <map>
#include <utility>
#include <vector>

namespace pcv {

class DegenerateVariance : public DomainError {
 public:
  using DomainError::DomainError;
};

struct CallPut {
  double call;
  double put;
};

// E[(e^X - K)^+] and E[(K - e^X)^+] for X ~ N(mu, var), var > 0.
CallPut lognormal_call_put(double mu, double var, double K);

// Gaussian law of the path x_{t+1}, ..., x_H given a time-t belief, stored as
// means plus loadings on a standardized basis (the state at t and the
// innovations xi_{t+1..H}). Any covariance is a product of two loadings.
class PathLaw {
 public:
  PathLaw(const MeasureSystem& sys, const PanelData& data, const StateBelief& belief, int horizon);

  int t() const { return t_; }
  int horizon() const { return H_; }
  const ModelDims& dims() const { return d_; }
  Eigen::Index basis_size() const { return basis_; }

  double rate_next() const { return r_next_; }  // r_{t+1}, known at t
  const Vec& log_book_t() const { return log_book_t_; }
  double log_discount_t() const { return log_discount_t_; }

  // x_s for s in t+1..H.
  const Vec& x_mean(int s) const;
  const Mat& x_loading(int s) const;
  Mat x_cov(int s1, int s2) const;

  // ln P_k = m_k + sum_{beta=t+1}^k b_beta + ln B_t, k in t+1..H.
  const Vec& log_price_mean(int k) const;
  const Mat& log_price_loading(int k) const;

  // sum_{beta=t+1}^{s} r_{beta+1}, s in t..H (zero at s = t).
  double rate_sum_mean(int s) const;
  const Mat& rate_sum_loading(int s) const;

  // m_t and u_{t+1} (requires H >= t+1).
  Vec m_mean() const;
  Mat m_loading() const;
  Mat u_next_loading() const;

  // Zero-coupon bond B_{t,u}, u in t+1..H.
  double bond(int u) const;
  // Mean under the (t,u)-forward measure of a linear functional with the given
  // mean and loading: mean - Cov[X, sum of rates].
  Vec forward_mean(const Vec& mean, const Mat& loading, int u) const;

 private:
  int t_;
  int H_;
  ModelDims d_;
  Eigen::Index basis_;
  double r_next_;
  Vec log_book_t_;
  double log_discount_t_;
  Vec m_mean_;
  Mat m_loading_;
  Mat u_next_loading_;
  std::vector<Vec> x_mean_;
  std::vector<Mat> x_load_;
  std::vector<Vec> lp_mean_;
  std::vector<Mat> lp_load_;
  std::vector<double> rs_mean_;
  std::vector<Mat> rs_load_;
};

struct ForwardShift {
  int t = 0;
  int u = 0;
  std::vector<Vec> shifted_mean;  // index s - t - 1, s = t+1..H: forward mean of x_s
  std::vector<Vec> c_hat;         // index beta - t - 1, beta = t+1..T
  Vec a_hat;                      // -1/2 diag(Sigma_uu) - J_b c_hat_{t+1}
};

// Forward-measure mean shift of every x_s, the per-time intercept shifts and a_hat.
ForwardShift forward_shift(const MeasureSystem& rn_sys, const PathLaw& law, int u);

// Risk-neutral system with forward intercepts nu_beta - G_beta c_hat_beta for beta > t.
MeasureSystem forward_system(const MeasureSystem& rn_sys, const ForwardShift& shift);

double bond_price(const PathLaw& law, int u);

struct TerminalLogPriceDist {
  int k = 0;
  int t = 0;
  int u = 0;
  Vec mean;  // forward mean
  Mat cov;
  Information info = Information::F;
};

TerminalLogPriceDist terminal_log_price_dist(const PathLaw& law, int k, int u);

enum class OptionKind { Call, Put };

// Time-t prices of European options on each company's price with maturity
// law.t() < maturity <= law.horizon().
Vec option_price(OptionKind kind, const Vec& K, int maturity, const PathLaw& law);

// Price when the option expires at the belief time: E[(P_t - K)^+ | F_t].
Vec option_value_at_expiry(OptionKind kind, const Vec& K, const PanelData& data,
                           const StateBelief& belief);

class LifeTable {
 public:
  void set(int age, int duration, double tpx);
  // _t p_x; duration 0 gives 1. Falls back to products of one-year entries.
  double survival(int age, int duration) const;
  double death(int age) const { return 1.0 - survival(age, 1); }
  // _{k-t} p_{x+t} q_{x+k}
  double deferred_death(int age, int t, int k) const;
  bool empty() const { return table_.empty(); }
  const std::map<std::pair<int, int>, double>& entries() const { return table_; }

 private:
  std::map<std::pair<int, int>, double> table_;
};

enum class InsuranceProduct { SegregatedTerm, SegregatedEndowment, UnitLinkedTerm, UnitLinkedEndowment };

std::string to_string(InsuranceProduct p);
InsuranceProduct insurance_product_from_string(const std::string& s);

struct InsuranceSpec {
  InsuranceProduct product = InsuranceProduct::SegregatedEndowment;
  std::vector<Vec> F_star;  // index k-1, k = 1..maturity
  std::vector<Vec> G_star;
  int age = 0;
  int maturity = 1;

  const Vec& F(int k) const { return F_star.at(static_cast<std::size_t>(k - 1)); }
  const Vec& G(int k) const { return G_star.at(static_cast<std::size_t>(k - 1)); }
  // Same fund units and guarantees at every k.
  static InsuranceSpec constant(InsuranceProduct product, const Vec& F, const Vec& G, int age,
                                int maturity);
};

// Net single premium at law.t() for an insured alive at that time.
Vec insurance_premium(const InsuranceSpec& spec, const LifeTable& table, const PathLaw& law);

}  // namespace pcv
