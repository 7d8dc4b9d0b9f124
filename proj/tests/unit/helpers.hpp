#pragma once

#include "pcv/em.hpp"
#include "pcv/hedging.hpp"
#include "pcv/kalman.hpp"
#include "pcv/mc.hpp"
#include "pcv/model.hpp"
#include "pcv/pricing.hpp"
#include "pcv/stacked.hpp"
#include "pcv/synthetic.hpp"

#include <algorithm>

namespace pcv::test {

struct Setup {
  ModelParameters params;
  PanelData data;
};

// Small diagonal model with non-paying companies and a flat rate.
inline Setup identity_setup(const ModelDims& d) {
  Setup s;
  s.params = ModelParameters::zeros(d);
  s.params.A.leftCols(d.ell) = 0.5 * Mat::Identity(d.ell, d.ell);
  s.params.Sigma_eta = 0.01 * Mat::Identity(d.n + d.ell, d.n + d.ell);
  s.params.Sigma_ww = 0.01 * Mat::Identity(d.n, d.n);
  s.params.Sigma_0 = 0.01 * Mat::Identity(d.n, d.n);
  s.data = panel_skeleton(d, Mat::Ones(d.T, d.l), Mat::Zero(d.T, d.n),
                          BoolMat::Constant(d.T, d.n, false), Vec::Ones(d.n),
                          Vec::Constant(d.ell * d.p, 0.02));
  s.data.b_tilde = Mat::Zero(d.T, d.n);
  s.data.z = Mat::Constant(d.T, d.ell, 0.02);
  return s;
}

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool psd(const Mat& m, double tol = 1e-12) { return min_eigenvalue(0.5 * (m + m.transpose())) >= -tol; }

}  // namespace pcv::test
