#include "pcv/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace pcv {

int Draws::integer(int lo, int hi) {
  const int span = hi - lo + 1;
  return lo + std::min(span - 1, static_cast<int>(uniform() * span));
}

Mat Draws::normal_matrix(int rows, int cols) {
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Mat Draws::spd(int k, double scale, double floor) {
  const Mat L = normal_matrix(k, k);
  return scale * (L * L.transpose() / k + floor * Mat::Identity(k, k));
}

PanelData panel_skeleton(const ModelDims& d, const Mat& psi, const Mat& Delta_tilde,
                         const BoolMat& pays, const Vec& B0, const Vec& z0_star) {
  PanelData data;
  data.B0 = B0;
  data.b_tilde = Mat::Zero(d.T, d.n);
  data.z = Mat::Zero(d.T, d.ell);
  data.z0_star = z0_star;
  data.Delta_tilde = Delta_tilde;
  data.pays_dividend = pays;
  data.psi = psi;
  return data;
}

Mat simulate_panel(const ModelParameters& params, PanelData& data, DividendConvention conv,
                   std::uint64_t seed, std::uint64_t stream) {
  data.observed_until = -1;
  const ModelSystems ms = ModelSystems::build(params, data, conv);
  StateBelief start;
  start.t = 0;
  start.mean = ms.real_sys.initial_mean();
  start.cov = ms.real_sys.initial_cov();
  const Simulator sim(ms, ms.real_sys, start, data.T());
  SimPath path;
  sim.path(seed, stream, false, path);
  for (int t = 1; t <= data.T(); ++t) {
    data.b_tilde.row(t - 1) = path.b.row(t);
    data.z.row(t - 1) = path.z.row(t);
  }
  return path.m;
}

Instance random_instance(std::uint64_t seed, std::uint64_t index, const InstanceShape& shape) {
  Draws dr(seed, index);
  ModelDims d;
  d.n = dr.integer(1, shape.max_n);
  d.ell = dr.integer(1, shape.max_ell);
  d.p = dr.integer(1, shape.max_p);
  d.l = dr.integer(1, shape.max_l);
  d.T = dr.integer(1, shape.max_T);

  Instance inst;
  inst.conv = dr.uniform() < 0.5 ? DividendConvention::BookValue : DividendConvention::MarketPrice;
  ModelParameters& p = inst.params;
  p = ModelParameters::zeros(d);
  p.C_k = 0.02 * dr.normal_matrix(d.n, d.l);
  p.C_z = 0.01 * dr.normal_matrix(d.ell, d.l);
  p.A = 0.3 * dr.normal_matrix(d.ell, d.ell * d.p) / d.p;
  p.C_m = 0.01 * dr.normal_matrix(d.n, d.l);
  p.Sigma_eta = dr.spd(d.n + d.ell, 0.01);
  p.Sigma_ww = dr.spd(d.n, 0.01);
  p.mu_0 = 0.2 * dr.normal_matrix(d.n, 1);
  p.Sigma_0 = dr.spd(d.n, 0.05);

  Mat psi = Mat::Ones(d.T, d.l);
  for (int t = 0; t < d.T; ++t)
    for (int j = 1; j < d.l; ++j) psi(t, j) = dr.uniform(-1.0, 1.0);
  Mat Delta(d.T, d.n);
  BoolMat pays(d.T, d.n);
  for (int t = 0; t < d.T; ++t)
    for (int i = 0; i < d.n; ++i) {
      Delta(t, i) = dr.uniform(-4.0, -2.5);
      pays(t, i) = dr.uniform() < 0.7;
    }
  Vec B0(d.n);
  for (int i = 0; i < d.n; ++i) B0(i) = dr.uniform(0.5, 2.0);
  Vec z0 = 0.01 * dr.normal_matrix(d.ell * d.p, 1);
  for (int lag = 0; lag < d.p; ++lag) z0(lag * d.ell) += 0.02;
  inst.data = panel_skeleton(d, psi, Delta, pays, B0, z0);
  inst.m_path = simulate_panel(p, inst.data, inst.conv, seed, index);
  return inst;
}

ModelParameters em_true_parameters() {
  ModelParameters p = ModelParameters::zeros({1, 1, 1, 1, 1});
  p.C_k(0, 0) = 0.05;
  p.C_z(0, 0) = 0.01;
  p.A(0, 0) = 0.5;
  p.C_m(0, 0) = 0.001;
  const double su = 0.05, sv = 0.01;
  p.Sigma_eta << su * su, 0.3 * su * sv, 0.3 * su * sv, sv * sv;
  p.Sigma_ww(0, 0) = 0.05 * 0.05;
  p.mu_0(0) = 0.3;
  p.Sigma_0(0, 0) = 0.01;
  return p;
}

Instance em_dataset(std::uint64_t seed, std::uint64_t index, int T) {
  Draws dr(seed, 0x454d000000000000ull + index);
  Instance inst;
  inst.conv = DividendConvention::BookValue;
  inst.params = em_true_parameters();
  const ModelDims d{1, 1, 1, 1, T};
  // Random dividend ratios and payment dates.
  Mat Delta(T, 1), psi(T, 1);
  BoolMat pays(T, 1);
  for (int t = 0; t < T; ++t) {
    Delta(t, 0) = std::log(dr.uniform(0.2, 0.8));
    pays(t, 0) = dr.uniform() < 0.6;
    psi(t, 0) = dr.normal();
  }
  inst.data = panel_skeleton(d, psi, Delta, pays, Vec::Ones(1), Vec::Constant(1, 0.0));
  inst.m_path = simulate_panel(inst.params, inst.data, inst.conv, seed, index);
  return inst;
}

Instance pricing_instance(std::uint64_t seed, int T) {
  Draws dr(seed, 0x5052494345ull);
  Instance inst;
  inst.conv = DividendConvention::BookValue;
  ModelParameters& p = inst.params;
  p = ModelParameters::zeros({1, 1, 1, 1, T});
  p.C_k(0, 0) = dr.uniform(0.03, 0.08);
  p.C_z(0, 0) = dr.uniform(0.005, 0.015);
  p.A(0, 0) = dr.uniform(0.3, 0.7);
  p.C_m(0, 0) = dr.uniform(-0.005, 0.005);
  const double su = dr.uniform(0.1, 0.2), sv = dr.uniform(0.005, 0.01);
  const double rho = dr.uniform(-0.5, 0.5);
  p.Sigma_eta << su * su, rho * su * sv, rho * su * sv, sv * sv;
  p.Sigma_ww(0, 0) = std::pow(dr.uniform(0.05, 0.1), 2);
  p.mu_0(0) = dr.uniform(0.0, 0.5);
  p.Sigma_0(0, 0) = std::pow(dr.uniform(0.05, 0.1), 2);
  const ModelDims d{1, 1, 1, 1, T};
  BoolMat pays(T, 1);
  for (int t = 0; t < T; ++t) pays(t, 0) = t % 2 == 1;
  inst.data = panel_skeleton(d, Mat::Ones(T, 1), Mat::Constant(T, 1, std::log(0.05)), pays,
                             Vec::Constant(1, 1.0), Vec::Constant(1, 0.02));
  inst.m_path = simulate_panel(p, inst.data, inst.conv, seed, 1);
  return inst;
}

}  // namespace pcv
