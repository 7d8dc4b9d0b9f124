#include "pcv/kalman.hpp"

#include <cmath>
#include <limits>

namespace pcv {

Vec observation_intercept(const MeasureSystem& sys, const PanelData& data, int t) {
  const ModelDims& d = sys.dims;
  const Vec zlag = data.z_star(t - 1);
  Vec c(d.n + d.ell);
  c.head(d.n) = sys.nu_b.row(t - 1).transpose() + sys.E_at(t) * zlag;
  c.tail(d.ell) = sys.nu_z.row(t - 1).transpose() + sys.A * zlag;
  return c;
}

Mat observation_noise(const MeasureSystem& sys, int t) {
  const ModelDims& d = sys.dims;
  Vec gy = Vec::Ones(d.n + d.ell);
  gy.head(d.n) = sys.G_at(t);
  const Mat eta = sys.Sigma_xi.topLeftCorner(d.n + d.ell, d.n + d.ell);
  return gy.asDiagonal() * eta * gy.asDiagonal();
}

Mat observation_loading(const MeasureSystem& sys, int t) {
  const ModelDims& d = sys.dims;
  Mat Z = Mat::Zero(d.n + d.ell, 2 * d.n);
  Z.topRows(d.n) = sys.Psi_b_at(t);
  return Z;
}

namespace {

Mat state_noise(const MeasureSystem& sys) {
  const int n = sys.dims.n;
  Mat q = Mat::Zero(2 * n, 2 * n);
  q.topLeftCorner(n, n) = sys.Sigma_xi.bottomRightCorner(n, n);
  return q;
}

Vec state_intercept(const MeasureSystem& sys, int t) {
  const int n = sys.dims.n;
  Vec c = Vec::Zero(2 * n);
  c.head(n) = sys.nu_m.row(t - 1).transpose();
  return c;
}

}  // namespace

FilterOutput filter(const MeasureSystem& sys, const PanelData& data, int t_end,
                    CovarianceUpdate update) {
  const ModelDims& d = sys.dims;
  const int T = t_end < 0 ? data.last_observed() : t_end;
  if (T > data.last_observed()) throw Error("filter: t_end beyond observed sample");
  const int ny = d.n + d.ell;
  const Mat C = select::shift_C(d.n);
  const Mat Q = state_noise(sys);
  const Mat I2n = Mat::Identity(2 * d.n, 2 * d.n);

  FilterOutput f;
  f.measure = sys.measure;
  f.T = T;
  f.predicted.resize(static_cast<std::size_t>(T + 1));
  f.filtered.resize(static_cast<std::size_t>(T + 1));
  f.innovations.resize(static_cast<std::size_t>(T + 1));
  f.innovation_cov.resize(static_cast<std::size_t>(T + 1));
  f.gains.resize(static_cast<std::size_t>(T + 1));

  StateBelief cur;
  cur.t = 0;
  cur.mean = sys.initial_mean();
  cur.cov = sys.initial_cov();
  cur.kind = BeliefKind::Filtered;
  cur.measure = sys.measure;
  f.filtered[0] = cur;

  const double log2pi = std::log(2.0 * M_PI);
  for (int t = 1; t <= T; ++t) {
    StateBelief pred;
    pred.t = t;
    pred.kind = BeliefKind::Predicted;
    pred.measure = sys.measure;
    pred.mean = state_intercept(sys, t) + C * cur.mean;
    pred.cov = symmetrize(C * cur.cov * C.transpose() + Q);

    const Mat Z = observation_loading(sys, t);
    const Mat H = observation_noise(sys, t);
    const Vec e = data.y(t) - observation_intercept(sys, data, t) - Z * pred.mean;
    const Mat S = symmetrize(Z * pred.cov * Z.transpose() + H);
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success)
      throw NumericalError("filter: innovation covariance not positive definite at t=" +
                           std::to_string(t));
    const Mat K = llt.solve(Z * pred.cov).transpose();

    StateBelief filt;
    filt.t = t;
    filt.kind = BeliefKind::Filtered;
    filt.measure = sys.measure;
    filt.mean = pred.mean + K * e;
    if (update == CovarianceUpdate::Joseph) {
      const Mat IKZ = I2n - K * Z;
      filt.cov = symmetrize(IKZ * pred.cov * IKZ.transpose() + K * H * K.transpose());
    } else {
      filt.cov = symmetrize(pred.cov - K * Z * pred.cov);
    }

    const Mat L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    f.log_likelihood += -0.5 * ny * log2pi - 0.5 * logdet - 0.5 * e.dot(llt.solve(e));

    f.predicted[static_cast<std::size_t>(t)] = pred;
    f.filtered[static_cast<std::size_t>(t)] = filt;
    f.innovations[static_cast<std::size_t>(t)] = e;
    f.innovation_cov[static_cast<std::size_t>(t)] = S;
    f.gains[static_cast<std::size_t>(t)] = K;
    cur = filt;
  }
  return f;
}

SmootherOutput smooth(const FilterOutput& f, const MeasureSystem& sys) {
  const int T = f.T;
  const Mat C = select::shift_C(sys.dims.n);
  SmootherOutput s;
  s.smoothed.resize(static_cast<std::size_t>(T + 1));
  s.lag_one_cov.resize(static_cast<std::size_t>(T));
  s.gains.resize(static_cast<std::size_t>(T));
  StateBelief next = f.filtered[static_cast<std::size_t>(T)];
  next.kind = BeliefKind::Smoothed;
  s.smoothed[static_cast<std::size_t>(T)] = next;
  for (int t = T - 1; t >= 0; --t) {
    const StateBelief& filt = f.filtered[static_cast<std::size_t>(t)];
    const StateBelief& pred = f.predicted[static_cast<std::size_t>(t + 1)];
    const Mat P_inv = inverse_sym(pred.cov, 1e-12, "smooth: predicted covariance at t=" +
                                                       std::to_string(t + 1));
    const Mat S = filt.cov * C.transpose() * P_inv;
    StateBelief sm;
    sm.t = t;
    sm.kind = BeliefKind::Smoothed;
    sm.measure = filt.measure;
    sm.mean = filt.mean + S * (next.mean - pred.mean);
    sm.cov = symmetrize(filt.cov + S * (next.cov - pred.cov) * S.transpose());
    s.gains[static_cast<std::size_t>(t)] = S;
    s.lag_one_cov[static_cast<std::size_t>(t)] = S * next.cov;
    s.smoothed[static_cast<std::size_t>(t)] = sm;
    next = sm;
  }
  return s;
}

PanelData extend_panel(const PanelData& data, const FutureInputs& fut) {
  const int T = data.T(), H = fut.horizon();
  if (fut.Delta_tilde.rows() != H || fut.pays.rows() != H)
    throw DimensionError("extend_panel: future inputs have inconsistent lengths");
  if (fut.psi.cols() != data.l() || fut.Delta_tilde.cols() != data.n() || fut.pays.cols() != data.n())
    throw DimensionError("extend_panel: future inputs have wrong widths");
  PanelData ext = data;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ext.b_tilde.conservativeResize(T + H, Eigen::NoChange);
  ext.b_tilde.bottomRows(H).setConstant(nan);
  ext.z.conservativeResize(T + H, Eigen::NoChange);
  ext.z.bottomRows(H).setConstant(nan);
  ext.Delta_tilde.conservativeResize(T + H, Eigen::NoChange);
  ext.Delta_tilde.bottomRows(H) = fut.Delta_tilde;
  ext.pays_dividend.conservativeResize(T + H, Eigen::NoChange);
  ext.pays_dividend.bottomRows(H) = fut.pays;
  ext.psi.conservativeResize(T + H, Eigen::NoChange);
  ext.psi.bottomRows(H) = fut.psi;
  ext.observed_until = data.last_observed();
  return ext;
}

ForecastOutput forecast(const FilterOutput& f, const ModelParameters& params,
                        const PanelData& data, DividendConvention conv,
                        const FutureInputs& future) {
  const int H = future.horizon();
  if (H < 1) throw Error("forecast: horizon must be >= 1");
  if (f.T != data.T()) throw Error("forecast: filter must cover the full panel");
  PanelData ext = extend_panel(data, future);
  const ModelSystems ms = ModelSystems::build(params, ext, conv);
  const MeasureSystem& sys = ms.real_sys;
  const ModelDims& d = sys.dims;
  const Mat C = select::shift_C(d.n);
  const Mat Q = state_noise(sys);

  ForecastOutput out;
  out.origin = f.T;
  StateBelief cur = f.filtered[static_cast<std::size_t>(f.T)];
  for (int t = f.T + 1; t <= f.T + H; ++t) {
    StateBelief b;
    b.t = t;
    b.kind = BeliefKind::Forecast;
    b.measure = sys.measure;
    b.mean = state_intercept(sys, t) + C * cur.mean;
    b.cov = symmetrize(C * cur.cov * C.transpose() + Q);
    const Mat Z = observation_loading(sys, t);
    Vec y = observation_intercept(sys, ext, t) + Z * b.mean;
    Mat S = symmetrize(Z * b.cov * Z.transpose() + observation_noise(sys, t));
    // Forecast z feeds the lags of later steps.
    ext.b_tilde.row(t - 1) = y.head(d.n).transpose();
    ext.z.row(t - 1) = y.tail(d.ell).transpose();
    out.states.push_back(b);
    out.y_mean.push_back(std::move(y));
    out.y_cov.push_back(std::move(S));
    cur = b;
  }
  return out;
}

}  // namespace pcv
