#include "doctest.h"
#include "helpers.hpp"

#include <cmath>

using namespace pcv;
using test::max_abs;

namespace {

// n = l = ell = p = 1 payer with g = 2 at t = 1 and spot rate 0.02.
test::Setup girsanov_setup(double sigma_vu) {
  ModelDims d{1, 1, 1, 1, 2};
  test::Setup s = test::identity_setup(d);
  s.params.Sigma_eta << 1.0, sigma_vu, sigma_vu, 1.0;
  s.data.pays_dividend.setConstant(true);
  s.data.Delta_tilde.setConstant(-std::log(2.0));
  return s;
}

}  // namespace

TEST_SUITE("stacked") {

TEST_CASE("Girsanov kernel for a single payer") {
  const test::Setup s = girsanov_setup(0.5);
  const ModelSystems ms = ModelSystems::build(s.params, s.data, DividendConvention::BookValue);
  const GirsanovKernel k = girsanov_kernel(1, s.params, s.data, ms.real);
  const Vec expected = (Vec(3) << 2.0, 0.5, 0.0).finished() * -0.48;
  CHECK(max_abs(k.theta - expected) < 1e-14);
}

TEST_CASE("Girsanov kernel vanishes when expected returns equal the rate") {
  ModelDims d{2, 1, 1, 1, 3};
  test::Setup s = test::identity_setup(d);
  s.params.C_k.setConstant(0.02 - 0.5 * 0.01);
  const ModelSystems ms = ModelSystems::build(s.params, s.data, DividendConvention::BookValue);
  for (int t = 1; t <= d.T; ++t) CHECK(max_abs(girsanov_kernel(t, s.params, s.data, ms.real).theta) < 1e-16);
}

TEST_CASE("uncorrelated shocks leave the economy unchanged under the risk-neutral measure") {
  const test::Setup s = girsanov_setup(0.0);
  const ModelSystems ms = ModelSystems::build(s.params, s.data, DividendConvention::BookValue);
  const GirsanovKernel k = girsanov_kernel(1, s.params, s.data, ms.real);
  CHECK(k.Theta(1, 0) == 0.0);
  CHECK(max_abs(ms.rn.A_tilde - s.params.A) == 0.0);
  CHECK(max_abs(ms.rn.nu_z_tilde - ms.real.nu_z) == 0.0);
}

TEST_CASE("risk-neutral drift without dividends") {
  ModelDims d{2, 2, 1, 1, 3};
  test::Setup s = test::identity_setup(d);
  s.params.Sigma_eta.diagonal() << 0.04, 0.09, 0.01, 0.01;
  const ModelSystems ms = ModelSystems::build(s.params, s.data, DividendConvention::BookValue);
  for (int t = 1; t <= d.T; ++t) {
    const Vec expect = -0.5 * s.params.Sigma_uu().diagonal();
    CHECK(max_abs(ms.rn.nu_b_tilde.row(t - 1).transpose() - expect) < 1e-16);
  }
}

TEST_CASE("state transition is the same under both measures") {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Instance in = random_instance(21, i);
    const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
    CHECK(max_abs(ms.rn.nu_m - ms.real.nu_m) == 0.0);
    CHECK(max_abs(ms.rn_sys.nu_m - ms.real_sys.nu_m) == 0.0);
  }
}

TEST_CASE("block inverse and propagators") {
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Instance in = random_instance(5, i);
    const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
    for (const MeasureSystem* sys : {&ms.real_sys, &ms.rn_sys}) {
      const int T = sys->T();
      for (int s = 1; s <= T; ++s) {
        const Mat I = Mat::Identity(sys->Q0(s).rows(), sys->Q0(s).cols());
        CHECK(max_abs(sys->Q0_inv(s) * sys->Q0(s) - I) < 1e-12);
        CHECK(max_abs(propagator_closed(*sys, s, s) - sys->Q0_inv(s)) < 1e-12);
        for (int beta = 1; beta <= s; ++beta)
          CHECK(max_abs(propagator_closed(*sys, beta, s) - propagator_product(*sys, beta, s)) < 1e-12);
      }
      const Propagators pr(*sys, 0, T);
      for (int s = 1; s <= T; ++s)
        for (int beta = 1; beta <= s; ++beta)
          CHECK(max_abs(pr.star(beta, s) - propagator_closed(*sys, beta, s)) < 1e-12);
    }
  }
}

TEST_CASE("shift matrix is idempotent") {
  for (int n : {1, 2, 3}) {
    const Mat C = select::shift_C(n);
    CHECK(max_abs(C * C - C) == 0.0);
  }
}

TEST_CASE("selectors pick exactly one coordinate per row") {
  const ModelDims d{2, 2, 2, 1, 4};
  for (const Mat& S : {select::x_from_star(d), select::y_from_star(d), select::mstar_from_star(d),
                       select::b_from_x(d), select::z_from_x(d), select::m_from_x(d)}) {
    CHECK(((S.array() == 0.0) || (S.array() == 1.0)).all());
    CHECK((S.rowwise().sum().array() == 1.0).all());
  }
}

TEST_CASE("conditional moments without noise are degenerate") {
  const Instance in = random_instance(9, 3);
  const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
  MeasureSystem sys = ms.real_sys;
  sys.Sigma_xi.setZero();
  const Vec m_star = Vec::Constant(2 * in.data.n(), 0.1);
  const Vec x_star = assemble_x_star(in.data, 1, m_star);
  const CondMoments cm = cond_moments_given_G(sys, 1, x_star, 2, in.data.T());
  CHECK(max_abs(cm.cov) == 0.0);
}

TEST_CASE("conditional covariance symmetry and information ordering") {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Instance in = random_instance(13, i);
    const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
    const int T = in.data.T();
    if (T < 3) continue;
    const FilterOutput f = filter(ms.rn_sys, in.data);
    const StateBelief& b = f.filtered[1];
    const Vec x_star = assemble_x_star(in.data, 1, b.mean);
    const CondMoments g23 = cond_moments_given_G(ms.rn_sys, 1, x_star, 2, 3);
    const CondMoments g32 = cond_moments_given_G(ms.rn_sys, 1, x_star, 3, 2);
    CHECK(max_abs(g23.cov - g32.cov.transpose()) < 1e-14);
    const CondMoments g33 = cond_moments_given_G(ms.rn_sys, 1, x_star, 3, 3);
    const CondMoments f33 = cond_moments_given_F(ms.rn_sys, in.data, b, 3, 3);
    CHECK(test::psd(g33.cov));
    CHECK(test::psd(f33.cov - g33.cov, 1e-12));
    CHECK(max_abs(f33.mean_s1 - g33.mean_s1) < 1e-12);

    const StateBelief known = StateBelief::known(1, b.mean, MeasureSpec::risk_neutral());
    const CondMoments k33 = cond_moments_given_F(ms.rn_sys, in.data, known, 3, 3);
    CHECK(max_abs(k33.cov - g33.cov) < 1e-14);
  }
}

TEST_CASE("direct conditioning of a single-period model by hand") {
  ModelDims d{1, 1, 1, 1, 1};
  test::Setup s = test::identity_setup(d);
  s.params.Sigma_eta << 0.04, 0.0, 0.0, 0.01;
  s.params.Sigma_ww << 0.09;
  s.params.Sigma_0 << 0.25;
  s.params.mu_0 << 0.3;
  s.data.b_tilde << 0.1;
  const ModelSystems ms = ModelSystems::build(s.params, s.data, DividendConvention::BookValue);
  const StateBelief b = condition_state_on_observations(ms.real_sys, s.data, 1, 1);
  // Without dividends b_1 = -m_1 + m_0 + u_1 = u_1 - w_1, so b_1 carries no news on m_0.
  const double var_m0 = 0.25, var_m1 = 0.25 + 0.09, var_b = 0.04 + 0.09;
  const double cov_m1_b = -0.09, cov_m0_b = 0.0;
  const double mean_b = 0.0;
  CHECK(b.mean(0) == doctest::Approx(0.3 + cov_m1_b / var_b * (0.1 - mean_b)).epsilon(1e-12));
  CHECK(b.mean(1) == doctest::Approx(0.3 + cov_m0_b / var_b * (0.1 - mean_b)).epsilon(1e-12));
  CHECK(b.cov(0, 0) == doctest::Approx(var_m1 - cov_m1_b * cov_m1_b / var_b).epsilon(1e-12));
  CHECK(b.cov(1, 1) == doctest::Approx(var_m0).epsilon(1e-12));
}

}
