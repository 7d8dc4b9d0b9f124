#include "pcv/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pcv {

void ModelDims::check() const {
  if (n < 1 || ell < 1 || p < 1 || l < 1 || T < 1)
    throw DimensionError("ModelDims: all counts must be >= 1");
}

std::string to_string(DividendConvention c) {
  return c == DividendConvention::BookValue ? "book" : "price";
}

DividendConvention convention_from_string(const std::string& s) {
  if (s == "book" || s == "BookValue") return DividendConvention::BookValue;
  if (s == "price" || s == "MarketPrice") return DividendConvention::MarketPrice;
  throw Error("unknown dividend convention '" + s + "' (expected book or price)");
}

ModelParameters ModelParameters::zeros(const ModelDims& d) {
  ModelParameters p;
  p.C_k = Mat::Zero(d.n, d.l);
  p.C_z = Mat::Zero(d.ell, d.l);
  p.A = Mat::Zero(d.ell, d.ell * d.p);
  p.C_m = Mat::Zero(d.n, d.l);
  p.Sigma_eta = Mat::Identity(d.n + d.ell, d.n + d.ell);
  p.Sigma_ww = Mat::Identity(d.n, d.n);
  p.mu_0 = Vec::Zero(d.n);
  p.Sigma_0 = Mat::Identity(d.n, d.n);
  return p;
}

Mat ModelParameters::Sigma_xi() const {
  const int k = n() + ell();
  Mat s = Mat::Zero(k + n(), k + n());
  s.topLeftCorner(k, k) = Sigma_eta;
  s.bottomRightCorner(n(), n()) = Sigma_ww;
  return s;
}

namespace {

template <class F>
void for_each_block(ModelParameters& p, F&& f) {
  f(p.C_k);
  f(p.C_z);
  f(p.A);
  f(p.C_m);
  f(p.Sigma_eta);
  f(p.Sigma_ww);
  f(p.Sigma_0);
}

}  // namespace

Eigen::Index ModelParameters::packed_size() const {
  return C_k.size() + C_z.size() + A.size() + C_m.size() + Sigma_eta.size() + Sigma_ww.size() +
         Sigma_0.size() + mu_0.size();
}

Vec ModelParameters::pack() const {
  Vec out(packed_size());
  Eigen::Index k = 0;
  auto put = [&](const Mat& m) {
    out.segment(k, m.size()) = Eigen::Map<const Vec>(m.data(), m.size());
    k += m.size();
  };
  auto& self = const_cast<ModelParameters&>(*this);
  for_each_block(self, put);
  out.segment(k, mu_0.size()) = mu_0;
  return out;
}

void ModelParameters::unpack(const Vec& theta) {
  if (theta.size() != packed_size()) throw DimensionError("ModelParameters::unpack: size mismatch");
  Eigen::Index k = 0;
  auto get = [&](Mat& m) {
    m = Eigen::Map<const Mat>(theta.data() + k, m.rows(), m.cols());
    k += m.size();
  };
  for_each_block(*this, get);
  mu_0 = theta.segment(k, mu_0.size());
}

Vec PanelData::b(int t) const { return b_tilde.row(t - 1).transpose(); }

Vec PanelData::z_at(int s) const {
  if (s >= 1) return z.row(s - 1).transpose();
  const int lag = -s;  // z_0 is block 0 of z0_star
  if (lag >= p()) throw DimensionError("z_at: pre-sample lag beyond p");
  return z0_star.segment(lag * ell(), ell());
}

Vec PanelData::z_star(int t) const {
  Vec out(ell() * p());
  for (int j = 0; j < p(); ++j) out.segment(j * ell(), ell()) = z_at(t - j);
  return out;
}

double PanelData::rate(int t) const { return z_at(t - 1)(0); }

Vec PanelData::psi_at(int t) const { return psi.row(t - 1).transpose(); }

Vec PanelData::psi_sum_before(int t) const {
  Vec s = Vec::Zero(l());
  for (int k = 1; k < t; ++k) s += psi_at(k);
  return s;
}

Vec PanelData::Delta(int t) const { return Delta_tilde.row(t - 1).transpose(); }

Vec PanelData::y(int t) const {
  Vec out(n() + ell());
  out << b(t), z_at(t);
  return out;
}

Vec PanelData::log_book(int t) const {
  Vec lb = B0.array().log().matrix();
  for (int s = 1; s <= t; ++s) lb += b(s);
  return lb;
}

double PanelData::log_discount(int t) const {
  double acc = 0.0;
  for (int s = 1; s <= t; ++s) acc -= rate(s);
  return acc;
}

ModelDims dims_of(const ModelParameters& params, const PanelData& data) {
  ModelDims d;
  d.n = params.n();
  d.ell = params.ell();
  d.p = params.p();
  d.l = params.l();
  d.T = data.T();
  return d;
}

namespace {

void check_shape(ValidationReport& r, const char* name, const Mat& m, Eigen::Index rows,
                 Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " shape " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
    r.fail(os.str());
  }
}

void check_psd(ValidationReport& r, const char* name, const Mat& m) {
  if (m.rows() != m.cols() || m.size() == 0) return;
  if (!m.allFinite() || min_eigenvalue(m) < -1e-10) r.fail(std::string(name) + " not PSD");
}

void check_pd(ValidationReport& r, const char* name, const Mat& m) {
  if (m.rows() != m.cols() || m.size() == 0) return;
  if (!m.allFinite() || min_eigenvalue(m) <= 0.0) r.fail(std::string(name) + " not positive definite");
}

}  // namespace

ValidationReport validate_model(const ModelDims& d, const ModelParameters& p, const PanelData& x) {
  ValidationReport r;
  if (d.n < 1 || d.ell < 1 || d.p < 1 || d.l < 1 || d.T < 1) {
    r.fail("dimension counts must be >= 1");
    return r;
  }
  check_shape(r, "C_k", p.C_k, d.n, d.l);
  check_shape(r, "C_z", p.C_z, d.ell, d.l);
  check_shape(r, "A", p.A, d.ell, d.ell * d.p);
  check_shape(r, "C_m", p.C_m, d.n, d.l);
  check_shape(r, "Sigma_eta", p.Sigma_eta, d.n + d.ell, d.n + d.ell);
  check_shape(r, "Sigma_ww", p.Sigma_ww, d.n, d.n);
  check_shape(r, "Sigma_0", p.Sigma_0, d.n, d.n);
  if (p.mu_0.size() != d.n) r.fail("mu_0 length mismatch");
  if (!r.ok) return r;

  check_psd(r, "Sigma_eta", p.Sigma_eta);
  check_psd(r, "Sigma_ww", p.Sigma_ww);
  check_psd(r, "Sigma_0", p.Sigma_0);
  check_pd(r, "Sigma_uu", p.Sigma_uu());
  check_pd(r, "Sigma_vv", p.Sigma_vv());

  auto rows_ok = [&](const char* name, Eigen::Index rows, Eigen::Index cols, Eigen::Index ecols) {
    if (rows != d.T) r.fail(std::string(name) + " length mismatch");
    if (cols != ecols) r.fail(std::string(name) + " width mismatch");
  };
  if (x.B0.size() != d.n) r.fail("B0 length mismatch");
  else if ((x.B0.array() <= 0.0).any()) r.fail("B0 must be strictly positive");
  rows_ok("b_tilde", x.b_tilde.rows(), x.b_tilde.cols(), d.n);
  rows_ok("z", x.z.rows(), x.z.cols(), d.ell);
  rows_ok("Delta_tilde", x.Delta_tilde.rows(), x.Delta_tilde.cols(), d.n);
  rows_ok("pays_dividend", x.pays_dividend.rows(), x.pays_dividend.cols(), d.n);
  rows_ok("psi", x.psi.rows(), x.psi.cols(), d.l);
  if (x.z0_star.size() != d.ell * d.p) r.fail("z0_star length mismatch");
  if (x.observed_until > d.T) r.fail("observed_until beyond T");
  if (!r.ok) return r;

  const int obs = x.last_observed();
  if (!x.b_tilde.topRows(obs).allFinite()) r.fail("b_tilde has non-finite observed entries");
  if (!x.z.topRows(obs).allFinite()) r.fail("z has non-finite observed entries");
  if (!x.psi.allFinite()) r.fail("psi has non-finite entries");
  if (!x.z0_star.allFinite()) r.fail("z0_star has non-finite entries");
  for (int t = 0; t < d.T; ++t)
    for (int i = 0; i < d.n; ++i)
      if (x.pays_dividend(t, i) && !std::isfinite(x.Delta_tilde(t, i)))
        r.fail("Delta_tilde non-finite for a dividend payer at t=" + std::to_string(t + 1));
  return r;
}

PhiOutOfDomain::PhiOutOfDomain(int t_, int i_, double phi)
    : DomainError("PhiOutOfDomain: phi=" + std::to_string(phi) + " >= 0 at t=" +
                  std::to_string(t_) + ", company=" + std::to_string(i_ + 1)),
      t(t_),
      i(i_) {}

LinearizationPoint linearize_phi(double phi) {
  // em1 = e^{-phi} - 1
  const double em1 = std::expm1(-phi);
  LinearizationPoint out;
  out.g = std::exp(-phi) / em1;
  out.mu = -std::log(em1);
  out.h = -(phi * out.g + std::log(em1));
  return out;
}

LinearizationParams linearization(const ModelParameters& params, const PanelData& data,
                                  DividendConvention conv) {
  const int T = data.T();
  const int n = data.n();
  LinearizationParams lin;
  lin.g = Mat::Ones(T, n);
  lin.h = Mat::Zero(T, n);
  lin.mu = Mat::Constant(T, n, -std::numeric_limits<double>::infinity());
  lin.phi = Mat::Zero(T, n);
  lin.pays = data.pays_dividend;

  Vec cum = Vec::Zero(data.l());
  for (int t = 1; t <= T; ++t) {
    const Vec psi = data.psi_at(t);
    Vec phi = -params.C_k * psi;
    if (conv == DividendConvention::BookValue) phi -= params.mu_0 + params.C_m * cum;
    for (int i = 0; i < n; ++i) {
      if (!data.pays(t, i)) {
        lin.phi(t - 1, i) = phi(i);
        continue;
      }
      const double ph = data.Delta_tilde(t - 1, i) + phi(i);
      lin.phi(t - 1, i) = ph;
      if (!(ph < 0.0)) throw PhiOutOfDomain(t, i, ph);
      const LinearizationPoint lp = linearize_phi(ph);
      lin.g(t - 1, i) = lp.g;
      lin.mu(t - 1, i) = lp.mu;
      lin.h(t - 1, i) = lp.h;
    }
    cum += psi;
  }
  return lin;
}

RealSystemCoefficients real_system(const ModelParameters& params, const PanelData& data,
                                   const LinearizationParams& lin, DividendConvention conv) {
  const int T = data.T();
  const int n = data.n();
  RealSystemCoefficients rc;
  rc.conv = conv;
  rc.nu_b.resize(T, n);
  rc.nu_z.resize(T, data.ell());
  rc.nu_m.resize(T, n);
  rc.G = lin.g;
  rc.Psi_b.reserve(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const Vec psi = data.psi_at(t);
    const Vec g = lin.g_at(t);
    Vec delta_term = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
      if (data.pays(t, i)) delta_term(i) = (g(i) - 1.0) * data.Delta_tilde(t - 1, i);
    const Vec ck = params.C_k * psi;
    rc.nu_b.row(t - 1) = (g.cwiseProduct(ck) - delta_term - lin.h_at(t)).transpose();
    rc.nu_z.row(t - 1) = (params.C_z * psi).transpose();
    rc.nu_m.row(t - 1) = (params.C_m * psi).transpose();
    Mat Psi(n, 2 * n);
    Psi.leftCols(n) = -Mat::Identity(n, n);
    if (conv == DividendConvention::BookValue)
      Psi.rightCols(n) = g.asDiagonal();
    else
      Psi.rightCols(n) = Mat::Identity(n, n);
    rc.Psi_b.push_back(std::move(Psi));
  }
  return rc;
}

Vec recover_u(const RealSystemCoefficients& real, const PanelData& data, int t, const Vec& m_star) {
  const Vec resid = data.b(t) - real.nu_b.row(t - 1).transpose() - real.Psi_b_at(t) * m_star;
  return resid.cwiseQuotient(real.G_at(t));
}

}  // namespace pcv
