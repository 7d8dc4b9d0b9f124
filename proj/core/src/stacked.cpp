#include "pcv/stacked.hpp"

#include <sstream>

namespace pcv {

std::string MeasureSpec::str() const {
  switch (kind) {
    case MeasureKind::Real:
      return "real";
    case MeasureKind::RiskNeutral:
      return "risk-neutral";
    case MeasureKind::Forward: {
      std::ostringstream os;
      os << "forward(" << t << "," << u << ")";
      return os.str();
    }
  }
  return "?";
}

StateBelief StateBelief::known(int t, const Vec& m_star, MeasureSpec measure) {
  StateBelief b;
  b.t = t;
  b.mean = m_star;
  b.cov = Mat::Zero(m_star.size(), m_star.size());
  b.kind = BeliefKind::Known;
  b.measure = measure;
  return b;
}

Vec MeasureSystem::nu(int t) const {
  Vec out(dims.n_tilde());
  out << nu_b.row(t - 1).transpose(), nu_z.row(t - 1).transpose(), nu_m.row(t - 1).transpose();
  return out;
}

Mat MeasureSystem::A_star() const {
  const int ell = dims.ell, p = dims.p;
  Mat a = Mat::Zero(ell * p, ell * p);
  a.topRows(ell) = A;
  if (p > 1) a.block(ell, 0, ell * (p - 1), ell * (p - 1)).setIdentity();
  return a;
}

namespace {

struct Offsets {
  int b, z, m, size;
};

Offsets star_offsets(const ModelDims& d) { return {0, d.n, d.n + d.ell * d.p, d.n_tilde_star()}; }

}  // namespace

Mat MeasureSystem::Q0(int t) const {
  const Offsets o = star_offsets(dims);
  Mat q = Mat::Identity(o.size, o.size);
  q.block(o.b, o.m, dims.n, 2 * dims.n) = -Psi_b_at(t);
  return q;
}

Mat MeasureSystem::Q0_inv(int t) const {
  const Offsets o = star_offsets(dims);
  Mat q = Mat::Identity(o.size, o.size);
  q.block(o.b, o.m, dims.n, 2 * dims.n) = Psi_b_at(t);
  return q;
}

Mat MeasureSystem::Q1(int t) const {
  const Offsets o = star_offsets(dims);
  Mat q = Mat::Zero(o.size, o.size);
  q.block(o.b, o.z, dims.n, dims.ell * dims.p) = E_at(t);
  q.block(o.z, o.z, dims.ell * dims.p, dims.ell * dims.p) = A_star();
  q.block(o.m, o.m, 2 * dims.n, 2 * dims.n) = select::shift_C(dims.n);
  return q;
}

Mat MeasureSystem::G_star(int t) const {
  const Offsets o = star_offsets(dims);
  Mat g = Mat::Identity(o.size, o.size);
  g.block(o.b, o.b, dims.n, dims.n) = G_at(t).asDiagonal();
  return g;
}

Mat MeasureSystem::G_block(int t) const {
  Mat g = Mat::Identity(dims.n_tilde(), dims.n_tilde());
  g.topLeftCorner(dims.n, dims.n) = G_at(t).asDiagonal();
  return g;
}

Vec MeasureSystem::initial_mean() const {
  Vec m(2 * dims.n);
  m << mu_0, mu_0;
  return m;
}

Mat MeasureSystem::initial_cov() const { return kron(Mat::Ones(2, 2), Sigma_0); }

namespace select {

Mat x_from_star(const ModelDims& d) {
  Mat j = Mat::Zero(d.n_tilde(), d.n_tilde_star());
  j.block(0, 0, d.n, d.n).setIdentity();
  j.block(d.n, d.n, d.ell, d.ell).setIdentity();
  j.block(d.n + d.ell, d.n + d.ell * d.p, d.n, d.n).setIdentity();
  return j;
}

Mat y_from_star(const ModelDims& d) {
  Mat j = Mat::Zero(d.n + d.ell, d.n_tilde_star());
  j.leftCols(d.n + d.ell).setIdentity();
  return j;
}

Mat ystar_from_star(const ModelDims& d) {
  Mat j = Mat::Zero(d.n + d.ell * d.p, d.n_tilde_star());
  j.leftCols(d.n + d.ell * d.p).setIdentity();
  return j;
}

Mat mstar_from_star(const ModelDims& d) {
  Mat j = Mat::Zero(2 * d.n, d.n_tilde_star());
  j.rightCols(2 * d.n).setIdentity();
  return j;
}

Mat b_from_x(const ModelDims& d) {
  Mat j = Mat::Zero(d.n, d.n_tilde());
  j.leftCols(d.n).setIdentity();
  return j;
}

Mat z_from_x(const ModelDims& d) {
  Mat j = Mat::Zero(d.ell, d.n_tilde());
  j.block(0, d.n, d.ell, d.ell).setIdentity();
  return j;
}

Mat m_from_x(const ModelDims& d) {
  Mat j = Mat::Zero(d.n, d.n_tilde());
  j.rightCols(d.n).setIdentity();
  return j;
}

Mat head_of_zstar(const ModelDims& d) {
  Mat j = Mat::Zero(d.ell, d.ell * d.p);
  j.leftCols(d.ell).setIdentity();
  return j;
}

Mat head_of_mstar(const ModelDims& d) {
  Mat j = Mat::Zero(d.n, 2 * d.n);
  j.leftCols(d.n).setIdentity();
  return j;
}

Mat shift_C(int n) {
  Mat c = Mat::Zero(2 * n, 2 * n);
  c.topLeftCorner(n, n).setIdentity();
  c.bottomLeftCorner(n, n).setIdentity();
  return c;
}

int rate_index(const ModelDims& d) { return d.n; }

}  // namespace select

GirsanovKernel girsanov_kernel(int t, const ModelParameters& params, const PanelData& data,
                               const RealSystemCoefficients& real) {
  const int n = params.n(), ell = params.ell();
  const Mat Suu = params.Sigma_uu();
  Eigen::LDLT<Mat> ldlt(Suu);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
    throw NumericalError("girsanov_kernel: Sigma_uu singular");
  GirsanovKernel k;
  k.Theta = Mat::Zero(2 * n + ell, n);
  k.Theta.topRows(n) = real.G_at(t).asDiagonal();
  k.Theta.middleRows(n, ell) = ldlt.solve(params.Sigma_uv()).transpose();
  const Vec kappa = data.rate(t) * Vec::Ones(n) - params.C_k * data.psi_at(t) -
                    0.5 * Suu.diagonal();
  k.theta = k.Theta * kappa;
  return k;
}

RiskNeutralCoefficients risk_neutral_system(const RealSystemCoefficients& real,
                                            const ModelParameters& params, const PanelData& data) {
  const int T = data.T(), n = params.n(), ell = params.ell(), p = params.p();
  const Mat Suu = params.Sigma_uu();
  Eigen::LDLT<Mat> ldlt(Suu);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
    throw NumericalError("risk_neutral_system: Sigma_uu singular");
  const Mat loading = ldlt.solve(params.Sigma_uv()).transpose();  // Sigma_vu Sigma_uu^{-1}
  const Vec half_var = 0.5 * Suu.diagonal();

  RiskNeutralCoefficients rn;
  rn.nu_b_tilde.resize(T, n);
  rn.nu_z_tilde.resize(T, ell);
  rn.nu_m = real.nu_m;
  rn.A_tilde = params.A;
  rn.A_tilde.col(0) += loading * Vec::Ones(n);
  rn.E.reserve(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const Vec g = real.G_at(t);
    const Vec ck = params.C_k * data.psi_at(t);
    rn.nu_b_tilde.row(t - 1) =
        (real.nu_b.row(t - 1).transpose() - g.cwiseProduct(ck) - g.cwiseProduct(half_var))
            .transpose();
    rn.nu_z_tilde.row(t - 1) =
        (params.C_z * data.psi_at(t) - loading * (ck + half_var)).transpose();
    Mat E = Mat::Zero(n, ell * p);
    E.col(0) = g;
    rn.E.push_back(std::move(E));
  }
  return rn;
}

namespace {

MeasureSystem base_system(const RealSystemCoefficients& real, const ModelParameters& params,
                          const PanelData& data) {
  MeasureSystem s;
  s.dims = dims_of(params, data);
  s.conv = real.conv;
  s.nu_m = real.nu_m;
  s.G = real.G;
  s.Psi_b = real.Psi_b;
  s.Sigma_xi = params.Sigma_xi();
  s.mu_0 = params.mu_0;
  s.Sigma_0 = params.Sigma_0;
  return s;
}

}  // namespace

MeasureSystem real_measure_system(const RealSystemCoefficients& real, const ModelParameters& params,
                                  const PanelData& data) {
  MeasureSystem s = base_system(real, params, data);
  s.measure = MeasureSpec::real();
  s.nu_b = real.nu_b;
  s.nu_z = real.nu_z;
  s.A = params.A;
  s.E.assign(static_cast<std::size_t>(data.T()), Mat::Zero(params.n(), params.ell() * params.p()));
  return s;
}

MeasureSystem risk_neutral_measure_system(const RiskNeutralCoefficients& rn,
                                          const RealSystemCoefficients& real,
                                          const ModelParameters& params, const PanelData& data) {
  MeasureSystem s = base_system(real, params, data);
  s.measure = MeasureSpec::risk_neutral();
  s.nu_b = rn.nu_b_tilde;
  s.nu_z = rn.nu_z_tilde;
  s.nu_m = rn.nu_m;
  s.A = rn.A_tilde;
  s.E = rn.E;
  return s;
}

ModelSystems ModelSystems::build(const ModelParameters& params, const PanelData& data,
                                 DividendConvention conv) {
  ModelSystems m;
  m.params = params;
  m.data = data;
  m.conv = conv;
  m.lin = linearization(params, data, conv);
  m.real = real_system(params, data, m.lin, conv);
  m.rn = risk_neutral_system(m.real, params, data);
  m.real_sys = real_measure_system(m.real, params, data);
  m.rn_sys = risk_neutral_measure_system(m.rn, m.real, params, data);
  return m;
}

const MeasureSystem& ModelSystems::system(MeasureKind kind) const {
  if (kind == MeasureKind::Real) return real_sys;
  if (kind == MeasureKind::RiskNeutral) return rn_sys;
  throw Error("ModelSystems::system: forward systems are built per (t,u)");
}

Mat propagator_closed(const MeasureSystem& sys, int beta, int s) {
  if (beta > s) throw Error("propagator_closed: beta > s");
  if (beta == s) return sys.Q0_inv(s);
  const ModelDims& d = sys.dims;
  const int k = s - beta;
  const int zp = d.ell * d.p;
  const Offsets o = star_offsets(d);
  const Mat As = sys.A_star();
  Mat a_pow = Mat::Identity(zp, zp);
  for (int i = 0; i < k - 1; ++i) a_pow = As * a_pow;  // A*^{k-1}
  const Mat C = select::shift_C(d.n);                   // C^k = C for k >= 1
  Mat pi = Mat::Zero(o.size, o.size);
  pi.block(o.b, o.z, d.n, zp) = sys.E_at(s) * a_pow;
  pi.block(o.b, o.m, d.n, 2 * d.n) = sys.Psi_b_at(s) * C;
  pi.block(o.z, o.z, zp, zp) = As * a_pow;
  pi.block(o.m, o.m, 2 * d.n, 2 * d.n) = C;
  return pi;
}

Mat propagator_product(const MeasureSystem& sys, int beta, int s) {
  if (beta > s) throw Error("propagator_product: beta > s");
  if (beta == s) return sys.Q0_inv(s);
  Mat pi = Mat::Identity(sys.dims.n_tilde_star(), sys.dims.n_tilde_star());
  for (int a = beta + 1; a <= s; ++a) pi = sys.transition(a) * pi;
  return pi;
}

Propagators::Propagators(const MeasureSystem& sys, int t, int T) : t_(t), T_(T), d_(sys.dims) {
  if (t < 0 || T > sys.T() || t > T) throw Error("Propagators: need 0 <= t <= T");
  pi_.resize(static_cast<std::size_t>(T - t + 1));
  for (int beta = t; beta <= T; ++beta) {
    auto& row = pi_[static_cast<std::size_t>(beta - t)];
    row.reserve(static_cast<std::size_t>(T - beta + 1));
    for (int s = beta; s <= T; ++s) {
      if (beta == 0 && s == 0) {
        row.push_back(Mat::Identity(d_.n_tilde_star(), d_.n_tilde_star()));
      } else if (s == beta) {
        row.push_back(sys.Q0_inv(s));
      } else {
        row.push_back(propagator_closed(sys, beta, s));
      }
    }
  }
}

const Mat& Propagators::star(int beta, int s) const {
  if (beta < t_ || s > T_ || beta > s) throw Error("Propagators::star: index out of window");
  return pi_[static_cast<std::size_t>(beta - t_)][static_cast<std::size_t>(s - beta)];
}

Mat Propagators::x(int beta, int s) const {
  const Mat J = select::x_from_star(d_);
  return J * star(beta, s) * J.transpose();
}

Mat Propagators::star_y(int beta, int s) const { return star(beta, s).leftCols(d_.n + d_.ell * d_.p); }

Mat Propagators::star_m(int beta, int s) const { return star(beta, s).rightCols(2 * d_.n); }

Propagators propagators(const MeasureSystem& sys, int t, int T) { return Propagators(sys, t, T); }

Vec assemble_x_star(const PanelData& data, int t, const Vec& m_star) {
  const int n = data.n();
  Vec x(n + data.ell() * data.p() + m_star.size());
  const Vec b = (t >= 1) ? data.b(t) : Vec::Zero(n);
  x << b, data.z_star(t), m_star;
  return x;
}

namespace {

// Sum over beta = t+1..min(s1,s2) of Pi_{beta,s1} G_beta Sigma_xi G_beta Pi_{beta,s2}'.
Mat innovation_cov(const MeasureSystem& sys, int t, int s1, int s2) {
  const ModelDims& d = sys.dims;
  const Mat J = select::x_from_star(d);
  Mat acc = Mat::Zero(d.n_tilde(), d.n_tilde());
  for (int beta = t + 1; beta <= std::min(s1, s2); ++beta) {
    const Mat Gb = sys.G_block(beta);
    const Mat L1 = J * propagator_closed(sys, beta, s1) * J.transpose() * Gb;
    const Mat L2 = J * propagator_closed(sys, beta, s2) * J.transpose() * Gb;
    acc += L1 * sys.Sigma_xi * L2.transpose();
  }
  return acc;
}

Vec propagated_mean(const MeasureSystem& sys, int t, const Vec& x_star_t, int s) {
  const Mat J = select::x_from_star(sys.dims);
  Vec mean = J * propagator_closed(sys, t, s) * x_star_t;
  for (int beta = t + 1; beta <= s; ++beta)
    mean += J * propagator_closed(sys, beta, s) * J.transpose() * sys.nu(beta);
  return mean;
}

void check_window(const MeasureSystem& sys, int t, int s1, int s2) {
  if (t < 0 || s1 <= t || s2 <= t || s1 > sys.T() || s2 > sys.T())
    throw Error("conditional moments: need 0 <= t < s1, s2 <= T");
}

}  // namespace

CondMoments cond_moments_given_G(const MeasureSystem& sys, int t, const Vec& x_star_t, int s1,
                                 int s2) {
  check_window(sys, t, s1, s2);
  CondMoments cm;
  cm.t = t;
  cm.s1 = s1;
  cm.s2 = s2;
  cm.info = Information::G;
  cm.measure = sys.measure;
  cm.mean_s1 = propagated_mean(sys, t, x_star_t, s1);
  cm.mean_s2 = propagated_mean(sys, t, x_star_t, s2);
  cm.cov = innovation_cov(sys, t, s1, s2);
  return cm;
}

CondMoments cond_moments_given_F(const MeasureSystem& sys, const PanelData& data,
                                 const StateBelief& belief, int s1, int s2) {
  const int t = belief.t;
  check_window(sys, t, s1, s2);
  const Vec x_star = assemble_x_star(data, t, belief.mean);
  CondMoments cm = cond_moments_given_G(sys, t, x_star, s1, s2);
  cm.info = Information::F;
  const Mat J = select::x_from_star(sys.dims);
  const Mat P1 = J * propagator_closed(sys, t, s1).rightCols(belief.mean.size());
  const Mat P2 = J * propagator_closed(sys, t, s2).rightCols(belief.mean.size());
  cm.cov += P1 * belief.cov * P2.transpose();
  return cm;
}

StateBelief condition_state_on_observations(const MeasureSystem& sys, const PanelData& data,
                                            int t, int tau) {
  const ModelDims& d = sys.dims;
  if (t < 0 || tau < 0 || t > sys.T() || tau > sys.T())
    throw Error("condition_state_on_observations: time out of range");
  const int ns = d.n_tilde_star();
  const int ny = d.n + d.ell;
  const int last = std::max(t, tau);
  const Mat Jx = select::x_from_star(d);

  // Unconditional (given F_0) moments of x*_s for s = 0..last.
  Vec x0 = assemble_x_star(data, 0, sys.initial_mean());
  Mat V0 = Mat::Zero(ns, ns);
  V0.bottomRightCorner(2 * d.n, 2 * d.n) = sys.initial_cov();

  std::vector<Mat> head(static_cast<std::size_t>(last + 1));  // loading on x*_0
  std::vector<Vec> mean(static_cast<std::size_t>(last + 1));
  head[0] = Mat::Identity(ns, ns);
  mean[0] = x0;
  for (int s = 1; s <= last; ++s) {
    head[static_cast<std::size_t>(s)] = propagator_closed(sys, 0, s);
    Vec m = head[static_cast<std::size_t>(s)] * x0;
    for (int beta = 1; beta <= s; ++beta)
      m += propagator_closed(sys, beta, s) * Jx.transpose() * sys.nu(beta);
    mean[static_cast<std::size_t>(s)] = m;
  }
  auto cov = [&](int s1, int s2) {
    Mat c = head[static_cast<std::size_t>(s1)] * V0 * head[static_cast<std::size_t>(s2)].transpose();
    for (int beta = 1; beta <= std::min(s1, s2); ++beta) {
      const Mat L1 = propagator_closed(sys, beta, s1) * Jx.transpose() * sys.G_block(beta);
      const Mat L2 = propagator_closed(sys, beta, s2) * Jx.transpose() * sys.G_block(beta);
      c += L1 * sys.Sigma_xi * L2.transpose();
    }
    return c;
  };

  const Mat Jy = select::y_from_star(d);
  const Mat Jm = select::mstar_from_star(d);
  StateBelief out;
  out.t = t;
  out.measure = sys.measure;
  out.kind = tau > t ? BeliefKind::Smoothed : BeliefKind::Filtered;
  const Vec prior_mean = Jm * mean[static_cast<std::size_t>(t)];
  const Mat prior_cov = Jm * cov(t, t) * Jm.transpose();
  if (tau == 0) {
    out.mean = prior_mean;
    out.cov = symmetrize(prior_cov);
    return out;
  }

  Vec ybar(ny * tau), ybar_mean(ny * tau);
  Mat Syy(ny * tau, ny * tau), Smy(2 * d.n, ny * tau);
  for (int s = 1; s <= tau; ++s) {
    ybar.segment((s - 1) * ny, ny) = data.y(s);
    ybar_mean.segment((s - 1) * ny, ny) = Jy * mean[static_cast<std::size_t>(s)];
    Smy.middleCols((s - 1) * ny, ny) = Jm * cov(t, s) * Jy.transpose();
    for (int r = 1; r <= tau; ++r)
      Syy.block((s - 1) * ny, (r - 1) * ny, ny, ny) = Jy * cov(s, r) * Jy.transpose();
  }
  const Mat Syy_inv = inverse_sym(Syy, 1e-10, "condition_state_on_observations");
  out.mean = prior_mean + Smy * Syy_inv * (ybar - ybar_mean);
  out.cov = symmetrize(prior_cov - Smy * Syy_inv * Smy.transpose());
  return out;
}

StateBelief cond_dist_state_given_F(const MeasureSystem& sys, const PanelData& data, int t) {
  return condition_state_on_observations(sys, data, t, t);
}

}  // namespace pcv
