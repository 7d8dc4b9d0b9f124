#pragma once

#include "pcv/linalg.hpp"

#include <string>
#include <vector>

namespace pcv {

struct ModelDims {
  int n = 1;    // companies
  int ell = 1;  // economic variables
  int p = 1;    // VAR lag order
  int l = 1;    // exogenous regressors
  int T = 1;    // sample length

  int n_tilde() const { return 2 * n + ell; }
  int n_tilde_star() const { return 3 * n + ell * p; }
  void check() const;
  bool operator==(const ModelDims&) const = default;
};

enum class DividendConvention { BookValue, MarketPrice };

std::string to_string(DividendConvention c);
DividendConvention convention_from_string(const std::string& s);

struct ModelParameters {
  Mat C_k;        // n x l
  Mat C_z;        // ell x l
  Mat A;          // ell x ell*p, [A_1 : ... : A_p]
  Mat C_m;        // n x l
  Mat Sigma_eta;  // (n+ell) x (n+ell), covariance of (u, v)
  Mat Sigma_ww;   // n x n
  Vec mu_0;       // n
  Mat Sigma_0;    // n x n

  static ModelParameters zeros(const ModelDims& d);

  int n() const { return static_cast<int>(C_k.rows()); }
  int ell() const { return static_cast<int>(C_z.rows()); }
  int l() const { return static_cast<int>(C_k.cols()); }
  int p() const { return ell() == 0 ? 0 : static_cast<int>(A.cols()) / ell(); }

  Mat Sigma_uu() const { return Sigma_eta.topLeftCorner(n(), n()); }
  Mat Sigma_uv() const { return Sigma_eta.topRightCorner(n(), ell()); }
  Mat Sigma_vu() const { return Sigma_eta.bottomLeftCorner(ell(), n()); }
  Mat Sigma_vv() const { return Sigma_eta.bottomRightCorner(ell(), ell()); }
  // blockdiag(Sigma_eta, Sigma_ww), the covariance of xi_t = (u, v, w).
  Mat Sigma_xi() const;

  // Flat vector of every entry, in a fixed order; used for convergence and
  // finite differences.
  Vec pack() const;
  void unpack(const Vec& theta);
  Eigen::Index packed_size() const;
};

struct PanelData {
  Vec B0;               // initial book values, > 0
  Mat b_tilde;          // T x n log book growth
  Mat z;                // T x ell economic variables
  Vec z0_star;          // (z_0, z_{-1}, ..., z_{1-p}) stacked
  Mat Delta_tilde;      // T x n
  BoolMat pays_dividend;  // T x n
  Mat psi;              // T x l
  int observed_until = -1;  // last t with observed b_tilde and z; -1 means T

  int T() const { return static_cast<int>(psi.rows()); }
  int n() const { return static_cast<int>(B0.size()); }
  int ell() const { return static_cast<int>(z.cols()); }
  int l() const { return static_cast<int>(psi.cols()); }
  int p() const { return ell() == 0 ? 0 : static_cast<int>(z0_star.size()) / ell(); }
  int last_observed() const { return observed_until < 0 ? T() : observed_until; }

  Vec b(int t) const;            // t in 1..T
  Vec z_at(int s) const;         // s in 1-p..T
  Vec z_star(int t) const;       // (z_t', ..., z_{t-p+1}')', t >= 0
  double rate(int t) const;      // log spot rate r_t = first entry of z_{t-1}
  Vec psi_at(int t) const;
  Vec psi_sum_before(int t) const;  // sum_{s<t} psi_s
  Vec Delta(int t) const;
  bool pays(int t, int i) const { return pays_dividend(t - 1, i); }
  Vec y(int t) const;            // (b_t', z_t')'
  Vec log_book(int t) const;     // ln B_t = ln B0 + sum_{s<=t} b_s
  double log_discount(int t) const;  // ln D_t = -sum_{s<=t} r_s
};

ModelDims dims_of(const ModelParameters& params, const PanelData& data);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> issues;
  void fail(std::string msg) {
    ok = false;
    issues.push_back(std::move(msg));
  }
};

ValidationReport validate_model(const ModelDims& dims, const ModelParameters& params,
                                const PanelData& data);

class PhiOutOfDomain : public DomainError {
 public:
  PhiOutOfDomain(int t, int i, double phi);
  int t;
  int i;
};

struct LinearizationParams {
  Mat g;     // T x n, >= 1
  Mat h;     // T x n
  Mat mu;    // T x n, -inf for non-payers
  Mat phi;   // T x n
  BoolMat pays;

  Vec g_at(int t) const { return g.row(t - 1).transpose(); }
  Vec h_at(int t) const { return h.row(t - 1).transpose(); }
};

// Under MarketPrice the dividend ratio is relative to the lagged price, so the
// expansion point does not involve the state mean.
LinearizationParams linearization(const ModelParameters& params, const PanelData& data,
                                  DividendConvention conv = DividendConvention::BookValue);

// Scalar form: (g, mu, h) from phi < 0.
struct LinearizationPoint {
  double g;
  double mu;
  double h;
};
LinearizationPoint linearize_phi(double phi);

struct RealSystemCoefficients {
  Mat nu_b;                 // T x n
  Mat nu_z;                 // T x ell
  Mat nu_m;                 // T x n
  Mat G;                    // T x n, diagonal entries of G_t
  std::vector<Mat> Psi_b;   // per t (index t-1), n x 2n
  DividendConvention conv = DividendConvention::BookValue;

  const Mat& Psi_b_at(int t) const { return Psi_b.at(static_cast<std::size_t>(t - 1)); }
  Vec G_at(int t) const { return G.row(t - 1).transpose(); }
};

RealSystemCoefficients real_system(const ModelParameters& params, const PanelData& data,
                                   const LinearizationParams& lin, DividendConvention conv);

// u_t = G_t^{-1}(b_t - nu_{b,t} - Psi_{b,t} m*_t), valid for both conventions.
Vec recover_u(const RealSystemCoefficients& real, const PanelData& data, int t, const Vec& m_star);

}  // namespace pcv
