#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace pcv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using BoolMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Warnings go through a replaceable sink; the default writes to stderr.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

Mat symmetrize(const Mat& m);
double min_eigenvalue(const Mat& m);
bool is_psd(const Mat& m, double floor = -1e-10);

// Eigenvalues of the symmetric part below floor are raised to floor.
Mat eigen_floor(const Mat& m, double floor);

// F with F F' = m for a PSD matrix; negative eigenvalues are clipped to 0.
Mat psd_factor(const Mat& m);

// Pseudo-inverse of a symmetric matrix; eigenvalues below rel_cutoff * max|λ| are dropped.
Mat pinv_sym(const Mat& m, double rel_cutoff, bool* truncated = nullptr);

// Inverse of a symmetric matrix via LDLT, falling back to pinv_sym when singular.
Mat inverse_sym(const Mat& m, double rel_cutoff, const std::string& context);

// log|m| for symmetric positive definite m; throws NumericalError otherwise.
double log_det_spd(const Mat& m);

double norm_cdf(double x);
double norm_pdf(double x);

// Kronecker product, used for a few stacked-vector identities.
Mat kron(const Mat& a, const Mat& b);

}  // namespace pcv
