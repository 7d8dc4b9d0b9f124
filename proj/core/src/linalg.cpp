#include "pcv/linalg.hpp"

#include <cmath>
#include <iostream>
#include <mutex>

namespace pcv {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink() = std::move(s);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(message);
}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Mat& m, double floor) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  return min_eigenvalue(m) >= floor;
}

Mat eigen_floor(const Mat& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  Vec ev = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

Mat psd_factor(const Mat& m) {
  const Eigen::Index k = m.rows();
  if (k == 0) return Mat(0, 0);
  Eigen::LLT<Mat> llt(symmetrize(m));
  if (llt.info() == Eigen::Success) {
    Mat l = llt.matrixL();
    if (l.allFinite()) return l;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

Mat pinv_sym(const Mat& m, double rel_cutoff, bool* truncated) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  const Vec& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  Vec inv = Vec::Zero(ev.size());
  bool cut = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > rel_cutoff * scale && scale > 0.0) {
      inv(i) = 1.0 / ev(i);
    } else {
      cut = true;
    }
  }
  if (truncated) *truncated = cut;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Mat inverse_sym(const Mat& m, double rel_cutoff, const std::string& context) {
  const Mat s = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  const Vec& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (scale > 0.0 && ev.minCoeff() > rel_cutoff * scale) {
    Eigen::LDLT<Mat> ldlt(s);
    return symmetrize(ldlt.solve(Mat::Identity(s.rows(), s.cols())));
  }
  warn(context + ": matrix numerically singular, using pseudo-inverse");
  return pinv_sym(s, rel_cutoff);
}

double log_det_spd(const Mat& m) {
  Eigen::LLT<Mat> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) throw NumericalError("log_det_spd: matrix not positive definite");
  const Mat l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace pcv
