#pragma once

#include "pcv/model.hpp"

#include <string>
#include <vector>

namespace pcv {

enum class MeasureKind { Real, RiskNeutral, Forward };

struct MeasureSpec {
  MeasureKind kind = MeasureKind::Real;
  int t = 0;  // forward measures only
  int u = 0;

  static MeasureSpec real() { return {}; }
  static MeasureSpec risk_neutral() { return {MeasureKind::RiskNeutral, 0, 0}; }
  static MeasureSpec forward(int t, int u) { return {MeasureKind::Forward, t, u}; }
  std::string str() const;
  bool operator==(const MeasureSpec&) const = default;
};

enum class BeliefKind { Predicted, Filtered, Smoothed, Forecast, Known };

// Gaussian law of the stacked state m*_t = (m_t', m_{t-1}')'.
struct StateBelief {
  int t = 0;
  Vec mean;
  Mat cov;
  BeliefKind kind = BeliefKind::Filtered;
  MeasureSpec measure;

  // State observed exactly (public-company mode).
  static StateBelief known(int t, const Vec& m_star, MeasureSpec measure);
  Vec m() const { return mean.head(mean.size() / 2); }
  Mat m_cov() const { return cov.topLeftCorner(mean.size() / 2, mean.size() / 2); }
};

// Intercepts and loadings of the system under one measure, t = 1..T.
//   b_t = nu_b + Psi_b m*_t + E_t z*_{t-1} + G_t u_t
//   z_t = nu_z + A z*_{t-1} + v_t
//   m_t = nu_m + m_{t-1} + w_t
struct MeasureSystem {
  MeasureSpec measure;
  ModelDims dims;
  DividendConvention conv = DividendConvention::BookValue;
  Mat nu_b;                // T x n
  Mat nu_z;                // T x ell
  Mat nu_m;                // T x n
  Mat G;                   // T x n
  std::vector<Mat> Psi_b;  // n x 2n per t
  std::vector<Mat> E;      // n x ell*p per t
  Mat A;                   // ell x ell*p
  Mat Sigma_xi;            // n_tilde x n_tilde
  Vec mu_0;
  Mat Sigma_0;

  int T() const { return dims.T; }
  Vec nu(int t) const;  // (nu_b', nu_z', nu_m')'
  Vec G_at(int t) const { return G.row(t - 1).transpose(); }
  const Mat& Psi_b_at(int t) const { return Psi_b.at(static_cast<std::size_t>(t - 1)); }
  const Mat& E_at(int t) const { return E.at(static_cast<std::size_t>(t - 1)); }

  Mat A_star() const;    // ell*p x ell*p companion
  Mat Q0(int t) const;
  Mat Q0_inv(int t) const;  // explicit block inverse
  Mat Q1(int t) const;
  Mat G_star(int t) const;  // diag(G_t, I, I) on the stacked state
  Mat G_block(int t) const;  // diag(G_t, I_ell, I_n) on x_t
  Mat transition(int t) const { return Q0_inv(t) * Q1(t); }

  // Initial law of m*_0: mean (mu_0', mu_0')', covariance E_2 (x) Sigma_0.
  Vec initial_mean() const;
  Mat initial_cov() const;
};

// Selector matrices for x_t = (b', z', m')' and x*_t = (b', z*', m*')'.
namespace select {
Mat x_from_star(const ModelDims& d);  // n_tilde x n_tilde*
Mat y_from_star(const ModelDims& d);  // (n+ell) x n_tilde*, picks (b_t, z_t)
Mat ystar_from_star(const ModelDims& d);  // (n+ell*p) x n_tilde*
Mat mstar_from_star(const ModelDims& d);  // 2n x n_tilde*
Mat b_from_x(const ModelDims& d);     // n x n_tilde
Mat z_from_x(const ModelDims& d);     // ell x n_tilde
Mat m_from_x(const ModelDims& d);     // n x n_tilde
Mat head_of_zstar(const ModelDims& d);  // ell x ell*p
Mat head_of_mstar(const ModelDims& d);  // n x 2n
Mat shift_C(int n);                   // [I 0; I 0]
int rate_index(const ModelDims& d);   // position of the spot rate in x_t
}  // namespace select

struct GirsanovKernel {
  Vec theta;  // n_tilde
  Mat Theta;  // n_tilde x n
};

GirsanovKernel girsanov_kernel(int t, const ModelParameters& params, const PanelData& data,
                               const RealSystemCoefficients& real);

struct RiskNeutralCoefficients {
  Mat nu_b_tilde;       // T x n
  std::vector<Mat> E;   // n x ell*p per t
  Mat nu_z_tilde;       // T x ell
  Mat A_tilde;          // ell x ell*p
  Mat nu_m;             // T x n
};

RiskNeutralCoefficients risk_neutral_system(const RealSystemCoefficients& real,
                                            const ModelParameters& params, const PanelData& data);

MeasureSystem real_measure_system(const RealSystemCoefficients& real, const ModelParameters& params,
                                  const PanelData& data);
MeasureSystem risk_neutral_measure_system(const RiskNeutralCoefficients& rn,
                                          const RealSystemCoefficients& real,
                                          const ModelParameters& params, const PanelData& data);

// Everything derived from (params, data, convention) once.
struct ModelSystems {
  ModelParameters params;
  PanelData data;
  DividendConvention conv = DividendConvention::BookValue;
  LinearizationParams lin;
  RealSystemCoefficients real;
  RiskNeutralCoefficients rn;
  MeasureSystem real_sys;
  MeasureSystem rn_sys;

  static ModelSystems build(const ModelParameters& params, const PanelData& data,
                            DividendConvention conv);
  const MeasureSystem& system(MeasureKind kind) const;
};

// Pi*_{beta,s}: closed form (block expressions) and the product of one-step
// transitions; both defined for beta <= s.
Mat propagator_closed(const MeasureSystem& sys, int beta, int s);
Mat propagator_product(const MeasureSystem& sys, int beta, int s);

class Propagators {
 public:
  Propagators(const MeasureSystem& sys, int t, int T);
  int t() const { return t_; }
  int T() const { return T_; }
  const Mat& star(int beta, int s) const;  // t <= beta <= s <= T
  Mat x(int beta, int s) const;            // J_x Pi* J_x'
  Mat star_y(int beta, int s) const;       // columns acting on y*
  Mat star_m(int beta, int s) const;       // columns acting on m*

 private:
  int t_;
  int T_;
  ModelDims d_;
  std::vector<std::vector<Mat>> pi_;
};

Propagators propagators(const MeasureSystem& sys, int t, int T);

enum class Information { G, F };

struct CondMoments {
  int t = 0;
  int s1 = 0;
  int s2 = 0;
  Vec mean_s1;
  Vec mean_s2;
  Mat cov;  // Cov[x_{s1}, x_{s2} | info]
  Information info = Information::G;
  MeasureSpec measure;
};

// x*_t = (b_t', z*_t', m*_t')' when the state is known.
Vec assemble_x_star(const PanelData& data, int t, const Vec& m_star);

CondMoments cond_moments_given_G(const MeasureSystem& sys, int t, const Vec& x_star_t, int s1,
                                 int s2);
CondMoments cond_moments_given_F(const MeasureSystem& sys, const PanelData& data,
                                 const StateBelief& belief, int s1, int s2);

// Direct joint-Gaussian conditioning of m*_t on (y_1, ..., y_tau) under the
// system's measure, starting from the initial law at time 0.
StateBelief condition_state_on_observations(const MeasureSystem& sys, const PanelData& data,
                                            int t, int tau);
StateBelief cond_dist_state_given_F(const MeasureSystem& sys, const PanelData& data, int t);

}  // namespace pcv
