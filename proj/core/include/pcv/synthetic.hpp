#pragma once

#include "pcv/mc.hpp"

#include <cstdint>

namespace pcv {

// Uniform, integer and normal draws from one Philox stream.
class Draws {
 public:
  Draws(std::uint64_t seed, std::uint64_t stream) : normals_(seed, stream) {}
  double normal() { return normals_.next(); }
  double uniform() { return norm_cdf(normals_.next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi);  // inclusive
  Mat normal_matrix(int rows, int cols);
  // scale * (L L' / k + floor I) with L standard normal.
  Mat spd(int k, double scale, double floor = 0.2);

 private:
  NormalStream normals_;
};

struct Instance {
  ModelParameters params;
  PanelData data;
  DividendConvention conv = DividendConvention::BookValue;
  Mat m_path;  // (T+1) x n, row t holds the simulated m_t
};

struct InstanceShape {
  int max_n = 2;
  int max_ell = 2;
  int max_p = 2;
  int max_l = 2;
  int max_T = 6;
};

// Panel with exogenous inputs filled and b_tilde, z set to zero.
PanelData panel_skeleton(const ModelDims& d, const Mat& psi, const Mat& Delta_tilde,
                         const BoolMat& pays, const Vec& B0, const Vec& z0_star);

// Draws b_tilde and z under the real-world measure, starting from the initial
// state law. Returns the simulated m path.
Mat simulate_panel(const ModelParameters& params, PanelData& data, DividendConvention conv,
                   std::uint64_t seed, std::uint64_t stream = 0);

// Random dimensions, parameters and simulated data; both conventions occur.
Instance random_instance(std::uint64_t seed, std::uint64_t index, const InstanceShape& shape = {});

// n = ell = p = l = 1 with a standard normal regressor and random dividend dates.
ModelParameters em_true_parameters();
Instance em_dataset(std::uint64_t seed, std::uint64_t index, int T = 300);

// n = 1 instance used for the pricing and hedging oracles.
Instance pricing_instance(std::uint64_t seed, int T = 8);

}  // namespace pcv
