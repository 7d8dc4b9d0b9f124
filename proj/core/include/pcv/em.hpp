#pragma once

#include "pcv/kalman.hpp"

#include <functional>
#include <vector>

namespace pcv {

// Smoothed moments of m*_t for t = 0..T.
struct SmootherMoments {
  std::vector<Vec> mean;
  std::vector<Mat> cov;
  int T() const { return static_cast<int>(mean.size()) - 1; }
  static SmootherMoments from(const SmootherOutput& s);
};

struct EStepQuantities {
  SmootherMoments moments;
  Mat u_smooth;      // T x n
  Mat u_k;           // T x n, u_smooth + C_k psi_t
  Mat v;             // T x ell
  Mat w_smooth;      // T x n
  Mat delta_smooth;  // T x n
  std::vector<Mat> Z;   // n x n per t
  Mat Escript;       // T x n
  Mat alpha;         // T x n
  std::vector<Mat> R;   // n x 2n loading of u_t on m*_t, per t
  double log_likelihood = 0.0;
};

// Quantities that depend on (params, smoothed moments); recomputed whenever
// the mean parameters move during the M-step.
EStepQuantities noise_quantities(const ModelParameters& params, const PanelData& data,
                                 DividendConvention conv, const SmootherMoments& moments);

EStepQuantities e_step(const ModelParameters& params, const PanelData& data,
                       DividendConvention conv);

struct MeanUpdate {
  Vec mu_0;
  Mat C_k;
  Mat C_m;
};

// One application of the stationarity conditions for (mu_0, C_k, C_m) given
// the noise covariances in params.
MeanUpdate m_step_book(const EStepQuantities& q, const ModelParameters& params,
                       const PanelData& data);
MeanUpdate m_step_price(const EStepQuantities& q, const ModelParameters& params,
                        const PanelData& data);

// Gradient of q_function in (mu_0, vec C_k, vec C_m) with the moments fixed;
// zero exactly where the updates above are fixed points.
Vec mean_gradient(const EStepQuantities& q, const ModelParameters& params, const PanelData& data,
                  DividendConvention conv);

// [C_z : A]
Mat m_step_var(const EStepQuantities& q, const ModelParameters& params, const PanelData& data);

struct CovUpdate {
  Mat Sigma_eta;
  Mat Sigma_ww;
  Mat Sigma_0;
};

CovUpdate m_step_cov(const EStepQuantities& q, const ModelParameters& params);

// Expected complete-data log-likelihood at params, under the given smoothed moments.
double q_function(const ModelParameters& params, const PanelData& data, DividendConvention conv,
                  const SmootherMoments& moments);

struct BlockGradient {
  std::string block;
  double max_abs = 0.0;
};

// Finite-difference gradient of q_function over each parameter block (Ridders'
// extrapolation from an initial step rel_step * scale). Symmetric blocks are
// perturbed symmetrically with scale sqrt(S_ii S_jj).
std::vector<BlockGradient> q_gradient_fd(const ModelParameters& params, const PanelData& data,
                                         DividendConvention conv, const SmootherMoments& moments,
                                         double rel_step = 1e-2);

struct EMOptions {
  double tol = 1e-7;
  int max_iter = 500;
  int inner_iter = 20;      // Newton steps for (mu_0, C_k, C_m) per M-step
  double inner_tol = 1e-14;  // Newton decrement relative to |Q|
  bool estimate_Sigma_0 = true;
  bool accelerate = true;   // squared extrapolation between EM steps
  std::function<void(int, double, double)> on_iteration;  // (iteration, LL, max rel change)
};

struct EMIteration {
  int iteration = 0;
  Vec theta;
  double log_likelihood = 0.0;
  double max_change = 0.0;
};

struct EMTrace {
  std::vector<EMIteration> iterations;
  bool converged = false;
  bool likelihood_decrease = false;
  int phi_projections = 0;
  double final_log_likelihood = 0.0;
};

struct EMResult {
  ModelParameters params;
  EMTrace trace;
};

EMResult em_run(const ModelParameters& theta0, const PanelData& data, DividendConvention conv,
                const EMOptions& opts = {});

// One full EM update (E-step at params, then all M-steps).
ModelParameters em_update(const ModelParameters& params, const PanelData& data,
                          DividendConvention conv, const EMOptions& opts, EStepQuantities* q_out,
                          int* phi_projections = nullptr);

// Deterministic starting values: OLS for the VAR block, zero mean
// coefficients, residual-based covariances.
ModelParameters initial_parameters(const PanelData& data, const Vec& mu0_proxy = Vec());

// V_{t|T} = exp(m_{t|T}) . B_t for t = 0..T (row t).
Mat smoothed_value(const SmootherOutput& s, const PanelData& data);

}  // namespace pcv
