#pragma once

#include "pcv/stacked.hpp"

#include <vector>

namespace pcv {

enum class CovarianceUpdate { Joseph, Standard };

struct FilterOutput {
  MeasureSpec measure;
  int T = 0;                             // last filtered time
  std::vector<StateBelief> predicted;    // index t, t = 1..T (entry 0 unused)
  std::vector<StateBelief> filtered;     // index t, t = 0..T
  std::vector<Vec> innovations;          // index t
  std::vector<Mat> innovation_cov;       // index t
  std::vector<Mat> gains;                // index t
  double log_likelihood = 0.0;
};

struct SmootherOutput {
  std::vector<StateBelief> smoothed;  // index t, t = 0..T
  std::vector<Mat> lag_one_cov;       // Cov[m*_t, m*_{t+1} | F_T], t = 0..T-1
  std::vector<Mat> gains;             // t = 0..T-1
};

// Observation intercept c_t = (nu_b + E_t z*_{t-1}, nu_z + A z*_{t-1}) and
// noise covariance G_y Sigma_eta G_y' for time t.
Vec observation_intercept(const MeasureSystem& sys, const PanelData& data, int t);
Mat observation_noise(const MeasureSystem& sys, int t);
Mat observation_loading(const MeasureSystem& sys, int t);  // [Psi_b; 0]

FilterOutput filter(const MeasureSystem& sys, const PanelData& data, int t_end = -1,
                    CovarianceUpdate update = CovarianceUpdate::Joseph);

SmootherOutput smooth(const FilterOutput& f, const MeasureSystem& sys);

struct FutureInputs {
  Mat psi;          // H x l
  Mat Delta_tilde;  // H x n
  BoolMat pays;     // H x n
  int horizon() const { return static_cast<int>(psi.rows()); }
};

// Appends future rows to a panel; b_tilde and z are left NaN there.
PanelData extend_panel(const PanelData& data, const FutureInputs& future);

struct ForecastOutput {
  int origin = 0;
  std::vector<StateBelief> states;  // t = origin+1 .. origin+H
  std::vector<Vec> y_mean;
  std::vector<Mat> y_cov;
};

// Real-measure forecasts of the state and of y_t beyond the filtered sample.
ForecastOutput forecast(const FilterOutput& f, const ModelParameters& params,
                        const PanelData& data, DividendConvention conv,
                        const FutureInputs& future);

}  // namespace pcv
