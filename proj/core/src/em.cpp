#include "pcv/em.hpp"

#include <cmath>
#include <limits>

namespace pcv {

SmootherMoments SmootherMoments::from(const SmootherOutput& s) {
  SmootherMoments m;
  for (const auto& b : s.smoothed) {
    m.mean.push_back(b.mean);
    m.cov.push_back(b.cov);
  }
  return m;
}

namespace {

Mat spd_inverse(const Mat& m, const char* what) {
  Eigen::LLT<Mat> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " not positive definite");
  return llt.solve(Mat::Identity(m.rows(), m.cols()));
}

Mat regressor_gram_inverse(const PanelData& data) {
  const int l = data.l();
  Mat gram = Mat::Zero(l, l);
  for (int t = 1; t <= data.T(); ++t) gram += data.psi_at(t) * data.psi_at(t).transpose();
  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-12 * gram.norm()).all())
    throw NumericalError("singular regressor Gram matrix sum psi psi'");
  return ldlt.solve(Mat::Identity(l, l));
}

Vec lagged_regressor(const PanelData& data, int t) {
  Vec zb(data.l() + data.ell() * data.p());
  zb << data.psi_at(t), data.z_star(t - 1);
  return zb;
}

// Loading of w_t on m*_t.
Mat w_loading(int n) {
  Mat r(n, 2 * n);
  r << Mat::Identity(n, n), -Mat::Identity(n, n);
  return r;
}

}  // namespace

EStepQuantities noise_quantities(const ModelParameters& params, const PanelData& data,
                                 DividendConvention conv, const SmootherMoments& moments) {
  const int n = params.n(), ell = params.ell(), T = data.T();
  const bool book = conv == DividendConvention::BookValue;
  const LinearizationParams lin = linearization(params, data, conv);
  const RealSystemCoefficients real = real_system(params, data, lin, conv);
  const Mat Omega = spd_inverse(params.Sigma_eta, "Sigma_eta");
  const Mat Ouu = Omega.topLeftCorner(n, n);
  const Mat Ouv = Omega.topRightCorner(n, ell);
  const Mat Rw = w_loading(n);
  Mat lag_sel = Mat::Zero(n, 2 * n);
  if (book) lag_sel.rightCols(n).setIdentity();

  EStepQuantities q;
  q.moments = moments;
  q.u_smooth.resize(T, n);
  q.u_k.resize(T, n);
  q.v.resize(T, ell);
  q.w_smooth.resize(T, n);
  q.delta_smooth.resize(T, n);
  q.Escript.resize(T, n);
  q.alpha.resize(T, n);
  q.Z.reserve(static_cast<std::size_t>(T));
  q.R.reserve(static_cast<std::size_t>(T));

  Vec psi_sum = Vec::Zero(data.l());
  for (int t = 1; t <= T; ++t) {
    const Vec g = real.G_at(t);
    const Vec ginv = g.cwiseInverse();
    const Vec& ms = moments.mean[static_cast<std::size_t>(t)];
    const Mat& S = moments.cov[static_cast<std::size_t>(t)];
    Mat R(n, 2 * n);
    R.leftCols(n) = ginv.asDiagonal();
    if (book)
      R.rightCols(n) = -Mat::Identity(n, n);
    else
      R.rightCols(n) = -Mat(ginv.asDiagonal());
    const Vec u = ginv.cwiseProduct(data.b(t) - real.nu_b.row(t - 1).transpose()) + R * ms;
    const Vec psi = data.psi_at(t);
    const Vec v = data.z_at(t) - params.C_z * psi - params.A * data.z_star(t - 1);
    const Vec w = Rw * ms - params.C_m * psi;
    const Vec gm1 = g.array() - 1.0;
    Vec kappa = Vec::Zero(n);
    if (book) kappa = params.mu_0 + params.C_m * psi_sum;
    const Vec delta = gm1.cwiseProduct(u + lag_sel * ms - kappa);
    const Mat Z = gm1.asDiagonal() * (R + lag_sel) * S * R.transpose();
    const Vec E = ((Z + delta * u.transpose()) * Ouu).diagonal();
    const Vec alpha = gm1 - E - delta.cwiseProduct(Ouv * v);

    q.u_smooth.row(t - 1) = u.transpose();
    q.u_k.row(t - 1) = (u + params.C_k * psi).transpose();
    q.v.row(t - 1) = v.transpose();
    q.w_smooth.row(t - 1) = w.transpose();
    q.delta_smooth.row(t - 1) = delta.transpose();
    q.Escript.row(t - 1) = E.transpose();
    q.alpha.row(t - 1) = alpha.transpose();
    q.Z.push_back(Z);
    q.R.push_back(R);
    psi_sum += psi;
  }
  return q;
}

EStepQuantities e_step(const ModelParameters& params, const PanelData& data,
                       DividendConvention conv) {
  const ModelSystems ms = ModelSystems::build(params, data, conv);
  const FilterOutput f = filter(ms.real_sys, data);
  const SmootherOutput s = smooth(f, ms.real_sys);
  EStepQuantities q = noise_quantities(params, data, conv, SmootherMoments::from(s));
  q.log_likelihood = f.log_likelihood;
  return q;
}

namespace {

MeanUpdate mean_update(const EStepQuantities& q, const ModelParameters& params,
                       const PanelData& data, bool book) {
  const int n = params.n(), T = data.T();
  const Mat gram_inv = regressor_gram_inverse(data);
  const Mat Omega = spd_inverse(params.Sigma_eta, "Sigma_eta");
  const Mat Ouu = Omega.topLeftCorner(n, n);
  const Mat Ouv = Omega.topRightCorner(n, params.ell());
  const Mat Rw = w_loading(n);

  Mat ck_num = Mat::Zero(n, data.l());
  Mat cm_num = Mat::Zero(n, data.l());
  Vec alpha_sum = Vec::Zero(n);
  Vec psi_sum = Vec::Zero(data.l());
  for (int t = 1; t <= T; ++t) {
    const Vec psi = data.psi_at(t);
    const Vec alpha = q.alpha.row(t - 1).transpose();
    const Vec uk = q.u_k.row(t - 1).transpose();
    const Vec v = q.v.row(t - 1).transpose();
    ck_num += (alpha + Ouu * uk + Ouv * v) * psi.transpose();
    cm_num += Rw * q.moments.mean[static_cast<std::size_t>(t)] * psi.transpose();
    if (book) cm_num += params.Sigma_ww * alpha * psi_sum.transpose();
    alpha_sum += alpha;
    psi_sum += psi;
  }
  MeanUpdate upd;
  const Vec m0 = q.moments.mean[0].head(n);
  upd.mu_0 = book ? Vec(m0 + params.Sigma_0 * alpha_sum) : m0;
  upd.C_k = Ouu.ldlt().solve(ck_num) * gram_inv;
  upd.C_m = cm_num * gram_inv;
  return upd;
}

}  // namespace

MeanUpdate m_step_book(const EStepQuantities& q, const ModelParameters& params,
                       const PanelData& data) {
  return mean_update(q, params, data, true);
}

MeanUpdate m_step_price(const EStepQuantities& q, const ModelParameters& params,
                        const PanelData& data) {
  return mean_update(q, params, data, false);
}

Mat m_step_var(const EStepQuantities& q, const ModelParameters& params, const PanelData& data) {
  const int n = params.n(), ell = params.ell(), T = data.T();
  const int k = data.l() + ell * data.p();
  const Mat Omega = spd_inverse(params.Sigma_eta, "Sigma_eta");
  const Mat Ovv = Omega.bottomRightCorner(ell, ell);
  const Mat Ovu = Omega.bottomLeftCorner(ell, n);
  const Mat loading = Ovv.ldlt().solve(Ovu);
  Mat num = Mat::Zero(ell, k);
  Mat gram = Mat::Zero(k, k);
  for (int t = 1; t <= T; ++t) {
    const Vec zb = lagged_regressor(data, t);
    num += (data.z_at(t) + loading * q.u_smooth.row(t - 1).transpose()) * zb.transpose();
    gram += zb * zb.transpose();
  }
  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-12 * gram.norm()).all())
    throw NumericalError("m_step_var: singular lagged-regressor Gram matrix");
  return ldlt.solve(num.transpose()).transpose();
}

CovUpdate m_step_cov(const EStepQuantities& q, const ModelParameters& params) {
  const int n = params.n(), ell = params.ell();
  const int T = static_cast<int>(q.u_smooth.rows());
  const Mat Rw = w_loading(n);
  Mat See = Mat::Zero(n + ell, n + ell);
  Mat Sww = Mat::Zero(n, n);
  for (int t = 1; t <= T; ++t) {
    const Mat& S = q.moments.cov[static_cast<std::size_t>(t)];
    Vec eta(n + ell);
    eta << q.u_smooth.row(t - 1).transpose(), q.v.row(t - 1).transpose();
    See += eta * eta.transpose();
    See.topLeftCorner(n, n) += q.R[static_cast<std::size_t>(t - 1)] * S *
                               q.R[static_cast<std::size_t>(t - 1)].transpose();
    const Vec w = q.w_smooth.row(t - 1).transpose();
    Sww += w * w.transpose() + Rw * S * Rw.transpose();
  }
  CovUpdate c;
  c.Sigma_eta = eigen_floor(See / T, 1e-12);
  c.Sigma_ww = eigen_floor(Sww / T, 1e-12);
  const Vec d0 = q.moments.mean[0].head(n) - params.mu_0;
  c.Sigma_0 = eigen_floor(q.moments.cov[0].topLeftCorner(n, n) + d0 * d0.transpose(), 1e-12);
  return c;
}

double q_function(const ModelParameters& params, const PanelData& data, DividendConvention conv,
                  const SmootherMoments& moments) {
  const int n = params.n(), ell = params.ell(), T = data.T();
  EStepQuantities q;
  try {
    q = noise_quantities(params, data, conv, moments);
  } catch (const PhiOutOfDomain&) {
    return -std::numeric_limits<double>::infinity();
  }
  Eigen::LLT<Mat> le(symmetrize(params.Sigma_eta)), lw(symmetrize(params.Sigma_ww)),
      l0(symmetrize(params.Sigma_0));
  if (le.info() != Eigen::Success || lw.info() != Eigen::Success || l0.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  const auto logdet = [](const Eigen::LLT<Mat>& llt) {
    return 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  };
  const LinearizationParams lin = linearization(params, data, conv);
  const Mat Rw = w_loading(n);

  double quad = 0.0, log_g = 0.0;
  for (int t = 1; t <= T; ++t) {
    const Mat& S = moments.cov[static_cast<std::size_t>(t)];
    const Mat& R = q.R[static_cast<std::size_t>(t - 1)];
    Vec eta(n + ell);
    eta << q.u_smooth.row(t - 1).transpose(), q.v.row(t - 1).transpose();
    Mat Eee = eta * eta.transpose();
    Eee.topLeftCorner(n, n) += R * S * R.transpose();
    const Vec w = q.w_smooth.row(t - 1).transpose();
    const Mat Eww = w * w.transpose() + Rw * S * Rw.transpose();
    quad += le.solve(Eee).trace() + lw.solve(Eww).trace();
    log_g += lin.g.row(t - 1).array().log().sum();
  }
  const Vec d0 = moments.mean[0].head(n) - params.mu_0;
  const Mat E0 = moments.cov[0].topLeftCorner(n, n) + d0 * d0.transpose();
  const double ntilde = 2 * n + ell;
  return -0.5 * (ntilde * T + n) * std::log(2.0 * M_PI) - 0.5 * T * logdet(le) -
         0.5 * T * logdet(lw) - 0.5 * logdet(l0) - 0.5 * quad - 0.5 * l0.solve(E0).trace() - log_g;
}

namespace {

// Derivative at 0 by Ridders' extrapolation of central differences, starting
// from step h0 and shrinking it until the tableau stops improving.
std::pair<double, double> ridders_tableau(const std::function<double(double)>& f, double h0) {
  constexpr int kTab = 10;
  constexpr double kCon = 1.4, kCon2 = kCon * kCon, kSafe = 2.0;
  const auto central = [&](double h) { return (f(h) - f(-h)) / (2.0 * h); };
  double h = h0;
  double d = central(h);
  for (int tries = 0; !std::isfinite(d) && tries < 30; ++tries) d = central(h *= 0.1);
  double a[kTab][kTab];
  a[0][0] = d;
  double best = d, err = std::numeric_limits<double>::infinity();
  for (int i = 1; i < kTab; ++i) {
    h /= kCon;
    a[0][i] = central(h);
    double fac = kCon2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kCon2;
      const double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        best = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * err) break;
  }
  return {best, err};
}

double ridders_derivative(const std::function<double(double)>& f, double h0) {
  double best = 0.0, err = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 4; ++k, h0 *= 0.1) {
    const auto [d, e] = ridders_tableau(f, h0);
    if (std::isfinite(d) && e < err) {
      best = d;
      err = e;
    }
  }
  return best;
}

}  // namespace

std::vector<BlockGradient> q_gradient_fd(const ModelParameters& params, const PanelData& data,
                                         DividendConvention conv, const SmootherMoments& moments,
                                         double rel_step) {
  struct Block {
    const char* name;
    Mat ModelParameters::*field;
    bool symmetric;
  };
  const Block blocks[] = {{"C_k", &ModelParameters::C_k, false},
                          {"C_z", &ModelParameters::C_z, false},
                          {"A", &ModelParameters::A, false},
                          {"C_m", &ModelParameters::C_m, false},
                          {"Sigma_eta", &ModelParameters::Sigma_eta, true},
                          {"Sigma_ww", &ModelParameters::Sigma_ww, true},
                          {"Sigma_0", &ModelParameters::Sigma_0, true}};
  std::vector<BlockGradient> out;
  auto diff = [&](const std::function<void(ModelParameters&, double)>& bump, double scale) {
    const auto f = [&](double h) {
      ModelParameters p = params;
      bump(p, h);
      return q_function(p, data, conv, moments);
    };
    return ridders_derivative(f, rel_step * scale);
  };
  for (const Block& b : blocks) {
    const Mat& M = params.*(b.field);
    BlockGradient g{b.name, 0.0};
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = 0; i < M.rows(); ++i) {
        if (b.symmetric && i < j) continue;
        const auto bump = [&](ModelParameters& p, double h) {
          (p.*(b.field))(i, j) += h;
          if (b.symmetric && i != j) (p.*(b.field))(j, i) += h;
        };
        const double scale = b.symmetric ? std::sqrt(std::abs(M(i, i) * M(j, j)))
                                         : std::max(1.0, std::abs(M(i, j)));
        g.max_abs = std::max(g.max_abs, std::abs(diff(bump, scale)));
      }
    out.push_back(g);
  }
  BlockGradient g{"mu_0", 0.0};
  for (Eigen::Index i = 0; i < params.mu_0.size(); ++i) {
    const auto bump = [&](ModelParameters& p, double h) { p.mu_0(i) += h; };
    g.max_abs = std::max(g.max_abs, std::abs(diff(bump, std::max(1.0, std::abs(params.mu_0(i))))));
  }
  out.push_back(g);
  return out;
}

Vec mean_gradient(const EStepQuantities& q, const ModelParameters& params, const PanelData& data,
                  DividendConvention conv) {
  const int n = params.n(), l = params.l(), T = data.T();
  const bool book = conv == DividendConvention::BookValue;
  const Mat Omega = spd_inverse(params.Sigma_eta, "Sigma_eta");
  const Mat Ouu = Omega.topLeftCorner(n, n);
  const Mat Ouv = Omega.topRightCorner(n, params.ell());
  Mat g_ck = Mat::Zero(n, l), g_cm = Mat::Zero(n, l);
  Vec alpha_sum = Vec::Zero(n), psi_sum = Vec::Zero(l);
  for (int t = 1; t <= T; ++t) {
    const Vec psi = data.psi_at(t);
    const Vec alpha = q.alpha.row(t - 1).transpose();
    g_ck += (alpha + Ouu * q.u_smooth.row(t - 1).transpose() + Ouv * q.v.row(t - 1).transpose()) *
            psi.transpose();
    g_cm += q.w_smooth.row(t - 1).transpose() * psi.transpose();
    if (book) g_cm += params.Sigma_ww * alpha * psi_sum.transpose();
    alpha_sum += alpha;
    psi_sum += psi;
  }
  g_cm = spd_inverse(params.Sigma_ww, "Sigma_ww") * g_cm;
  Vec g_mu = spd_inverse(params.Sigma_0, "Sigma_0") * (q.moments.mean[0].head(n) - params.mu_0);
  if (book) g_mu += alpha_sum;
  Vec out(n + 2 * n * l);
  out << g_mu, g_ck.reshaped(), g_cm.reshaped();
  return out;
}

namespace {

Vec pack_means(const ModelParameters& p) {
  Vec out(p.n() + 2 * p.C_k.size());
  out << p.mu_0, p.C_k.reshaped(), p.C_m.reshaped();
  return out;
}

ModelParameters with_means(const ModelParameters& p, const Vec& x) {
  ModelParameters out = p;
  const Eigen::Index n = p.n(), k = p.C_k.size();
  out.mu_0 = x.head(n);
  out.C_k = x.segment(n, k).reshaped(p.n(), p.l());
  out.C_m = x.segment(n + k, k).reshaped(p.n(), p.l());
  return out;
}

// Maximizes Q over (mu_0, C_k, C_m) with the moments fixed: Newton steps on the
// stationarity equations with a finite-difference Jacobian, Levenberg damping
// and backtracking on Q. Returns true if any trial left the domain of phi.
bool maximize_means(ModelParameters& params, const PanelData& data, DividendConvention conv,
                    const SmootherMoments& mom, const EMOptions& opts) {
  bool left_domain = false;
  Vec x = pack_means(params);
  double q_x = q_function(params, data, conv, mom);
  const auto grad_at = [&](const Vec& y) {
    const ModelParameters p = with_means(params, y);
    return mean_gradient(noise_quantities(p, data, conv, mom), p, data, conv);
  };
  for (int it = 0; it < opts.inner_iter; ++it) {
    const Vec g = grad_at(x);
    const Eigen::Index k = x.size();
    Mat H(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      try {
        H.col(j) = (grad_at(xp) - grad_at(xm)) / (2.0 * h);
      } catch (const PhiOutOfDomain&) {
        left_domain = true;
        return left_domain;
      }
    }
    const Mat negH = symmetrize(-H);
    double damping = 0.0;
    Vec step;
    for (int tries = 0; tries < 60; ++tries) {
      Eigen::LLT<Mat> llt(negH + damping * Mat::Identity(k, k));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(g);
        break;
      }
      damping = damping == 0.0 ? 1e-8 * std::max(1.0, negH.diagonal().cwiseAbs().maxCoeff())
                               : 10.0 * damping;
    }
    if (step.size() == 0) break;
    double scale = 1.0, q_new = -std::numeric_limits<double>::infinity();
    Vec x_new;
    for (int bt = 0; bt < 50; ++bt) {
      x_new = x + scale * step;
      q_new = q_function(with_means(params, x_new), data, conv, mom);
      if (std::isinf(q_new)) left_domain = true;
      if (q_new >= q_x) break;
      scale *= 0.5;
    }
    if (!(q_new >= q_x)) break;
    const double decrement = g.dot(step);
    x = x_new;
    q_x = q_new;
    if (decrement < opts.inner_tol * (1.0 + std::abs(q_x))) break;
  }
  params = with_means(params, x);
  return left_domain;
}

}  // namespace

ModelParameters em_update(const ModelParameters& params, const PanelData& data,
                          DividendConvention conv, const EMOptions& opts, EStepQuantities* q_out,
                          int* phi_projections) {
  const EStepQuantities q0 = e_step(params, data, conv);
  const SmootherMoments& mom = q0.moments;

  ModelParameters cand = params;
  if (maximize_means(cand, data, conv, mom, opts) && phi_projections) ++*phi_projections;

  // VAR block with the updated means.
  EStepQuantities q1 = noise_quantities(cand, data, conv, mom);
  const Mat Abar = m_step_var(q1, cand, data);
  cand.C_z = Abar.leftCols(data.l());
  cand.A = Abar.rightCols(Abar.cols() - data.l());

  // Covariances with all means updated.
  q1 = noise_quantities(cand, data, conv, mom);
  const CovUpdate cu = m_step_cov(q1, cand);
  cand.Sigma_eta = cu.Sigma_eta;
  cand.Sigma_ww = cu.Sigma_ww;
  if (opts.estimate_Sigma_0) cand.Sigma_0 = cu.Sigma_0;

  if (q_out) {
    *q_out = q1;
    q_out->log_likelihood = q0.log_likelihood;
  }
  return cand;
}

namespace {

bool admissible(const ModelParameters& p) {
  for (const Mat* m : {&p.Sigma_eta, &p.Sigma_ww, &p.Sigma_0}) {
    Eigen::LLT<Mat> llt(symmetrize(*m));
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

double log_likelihood_or_nan(const ModelParameters& p, const PanelData& data,
                             DividendConvention conv) {
  if (!admissible(p)) return std::numeric_limits<double>::quiet_NaN();
  try {
    const ModelSystems ms = ModelSystems::build(p, data, conv);
    return filter(ms.real_sys, data).log_likelihood;
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

EMResult em_run(const ModelParameters& theta0, const PanelData& data, DividendConvention conv,
                const EMOptions& opts) {
  EMResult res;
  EMTrace& trace = res.trace;
  ModelParameters theta = theta0;
  double prev_ll = std::numeric_limits<double>::quiet_NaN();
  bool stop = false;

  // One EM map evaluation; records the trace row for its starting point.
  const auto step = [&](const ModelParameters& from) {
    EStepQuantities q;
    ModelParameters next = em_update(from, data, conv, opts, &q, &trace.phi_projections);
    const double ll = q.log_likelihood;
    const Vec a = from.pack(), b = next.pack();
    const double change = (b - a).cwiseAbs().maxCoeff() / (1.0 + a.cwiseAbs().maxCoeff());
    const int it = static_cast<int>(trace.iterations.size());
    trace.iterations.push_back({it, a, ll, change});
    if (opts.on_iteration) opts.on_iteration(it, ll, change);
    if (!std::isnan(prev_ll) && ll < prev_ll - std::max(1e-6, 1e-8 * std::abs(prev_ll))) {
      trace.likelihood_decrease = true;
      stop = true;
    }
    const double dll = std::isnan(prev_ll) ? std::numeric_limits<double>::infinity()
                                           : std::abs(ll - prev_ll);
    prev_ll = ll;
    if (!stop && std::max(change, dll) < opts.tol) {
      trace.converged = true;
      stop = true;
    }
    if (static_cast<int>(trace.iterations.size()) >= opts.max_iter) stop = true;
    return next;
  };

  while (!stop) {
    const ModelParameters t1 = step(theta);
    if (stop || !opts.accelerate) {
      theta = t1;
      continue;
    }
    const ModelParameters t2 = step(t1);
    if (stop) {
      theta = t2;
      continue;
    }
    const double ll1 = prev_ll;  // log-likelihood at t1
    // Squared extrapolation; falls back to the plain EM point t2 when the
    // extrapolated parameters are inadmissible or lower the likelihood.
    const Vec x0 = theta.pack(), r = t1.pack() - x0, v = t2.pack() - t1.pack() - r;
    theta = t2;
    if (v.norm() == 0.0) continue;
    double alpha = std::min(-1.0, -r.norm() / v.norm());
    while (alpha < -1.0) {
      ModelParameters cand = t2;
      cand.unpack(x0 - 2.0 * alpha * r + alpha * alpha * v);
      const double ll = log_likelihood_or_nan(cand, data, conv);
      if (!std::isnan(ll) && ll >= ll1) {
        theta = cand;
        break;
      }
      alpha = (alpha - 1.0) / 2.0;
      if (alpha > -1.0 - 1e-3) break;
    }
  }
  trace.final_log_likelihood = log_likelihood_or_nan(theta, data, conv);
  res.params = theta;
  return res;
}

ModelParameters initial_parameters(const PanelData& data, const Vec& mu0_proxy) {
  const int n = data.n(), ell = data.ell(), p = data.p(), l = data.l(), T = data.T();
  ModelDims d{n, ell, p, l, T};
  ModelParameters theta = ModelParameters::zeros(d);
  const int k = l + ell * p;
  Mat num = Mat::Zero(ell, k), gram = Mat::Zero(k, k);
  for (int t = 1; t <= T; ++t) {
    const Vec zb = lagged_regressor(data, t);
    num += data.z_at(t) * zb.transpose();
    gram += zb * zb.transpose();
  }
  const Mat Abar = gram.ldlt().solve(num.transpose()).transpose();
  theta.C_z = Abar.leftCols(l);
  theta.A = Abar.rightCols(ell * p);
  Mat Svv = Mat::Zero(ell, ell);
  for (int t = 1; t <= T; ++t) {
    const Vec r = data.z_at(t) - Abar * lagged_regressor(data, t);
    Svv += r * r.transpose();
  }
  Svv /= T;
  const Vec bmean = data.b_tilde.colwise().mean().transpose();
  Vec bvar = Vec::Zero(n);
  for (int t = 1; t <= T; ++t) bvar += (data.b(t) - bmean).cwiseAbs2();
  bvar = (bvar / T).cwiseMax(1e-4);
  theta.Sigma_eta.setZero();
  theta.Sigma_eta.topLeftCorner(n, n) = (0.5 * bvar).asDiagonal();
  theta.Sigma_eta.bottomRightCorner(ell, ell) = eigen_floor(Svv, 1e-8);
  theta.Sigma_ww = (0.5 * bvar).asDiagonal();
  theta.Sigma_0 = bvar.asDiagonal();
  theta.mu_0 = mu0_proxy.size() == n ? mu0_proxy : Vec::Zero(n);
  return theta;
}

Mat smoothed_value(const SmootherOutput& s, const PanelData& data) {
  const int T = static_cast<int>(s.smoothed.size()) - 1;
  const int n = data.n();
  Mat V(T + 1, n);
  for (int t = 0; t <= T; ++t)
    V.row(t) = (s.smoothed[static_cast<std::size_t>(t)].m() + data.log_book(t)).array().exp().transpose();
  return V;
}

}  // namespace pcv
