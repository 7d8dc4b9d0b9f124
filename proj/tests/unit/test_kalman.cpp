#include "doctest.h"
#include "helpers.hpp"

#include <cmath>
#include <utility>

using namespace pcv;
using test::max_abs;

namespace {

test::Setup two_company_setup(std::uint64_t seed, DividendConvention conv) {
  ModelDims d{2, 1, 1, 1, 12};
  test::Setup s = test::identity_setup(d);
  s.params.C_k << 0.05, 0.02;
  s.params.C_z << 0.01;
  s.params.C_m << 0.0, 0.002;
  s.params.Sigma_eta << 0.01, 0.003, 0.0002, 0.003, 0.02, -0.0001, 0.0002, -0.0001, 0.0001;
  s.params.Sigma_ww << 0.004, 0.001, 0.001, 0.002;
  s.params.mu_0 << 0.4, 0.1;
  s.params.Sigma_0 << 0.02, 0.005, 0.005, 0.03;
  for (int t = 0; t < d.T; ++t) {
    s.data.pays_dividend(t, 0) = true;
    s.data.Delta_tilde(t, 0) = std::log(0.03);
    s.data.pays_dividend(t, 1) = t % 3 != 0;
    s.data.Delta_tilde(t, 1) = std::log(0.05);
  }
  s.data.B0 << 1.0, 3.0;
  simulate_panel(s.params, s.data, conv, seed);
  return s;
}

test::Setup swap_companies(const test::Setup& s) {
  test::Setup r = s;
  Eigen::PermutationMatrix<Eigen::Dynamic> P(2);
  P.indices() << 1, 0;
  r.params.C_k = P * s.params.C_k;
  r.params.C_m = P * s.params.C_m;
  r.params.mu_0 = P * s.params.mu_0;
  r.params.Sigma_0 = P * s.params.Sigma_0 * P.transpose();
  r.params.Sigma_ww = P * s.params.Sigma_ww * P.transpose();
  Eigen::PermutationMatrix<Eigen::Dynamic> Q(3);
  Q.indices() << 1, 0, 2;
  r.params.Sigma_eta = Q * s.params.Sigma_eta * Q.transpose();
  r.data.B0 = P * s.data.B0;
  r.data.b_tilde = s.data.b_tilde * P.transpose();
  r.data.Delta_tilde = s.data.Delta_tilde * P.transpose();
  r.data.pays_dividend.col(0) = s.data.pays_dividend.col(1);
  r.data.pays_dividend.col(1) = s.data.pays_dividend.col(0);
  return r;
}

}  // namespace

TEST_SUITE("kalman") {

TEST_CASE("filter and smoother agree with direct Gaussian conditioning") {
  double err = 0.0;
  for (std::uint64_t i = 0; i < 25; ++i) {
    const Instance in = random_instance(20240601, i);
    const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
    for (const MeasureSystem* sys : {&ms.real_sys, &ms.rn_sys}) {
      const FilterOutput f = filter(*sys, in.data);
      const SmootherOutput sm = smooth(f, *sys);
      const int T = in.data.T();
      for (int t = 0; t <= T; ++t) {
        const StateBelief a = condition_state_on_observations(*sys, in.data, t, t);
        const StateBelief b = condition_state_on_observations(*sys, in.data, t, T);
        const auto k = static_cast<std::size_t>(t);
        err = std::max({err, max_abs(a.mean - f.filtered[k].mean), max_abs(a.cov - f.filtered[k].cov),
                        max_abs(b.mean - sm.smoothed[k].mean), max_abs(b.cov - sm.smoothed[k].cov)});
      }
    }
  }
  CHECK(err <= 1e-8);
}

TEST_CASE("Joseph and standard covariance updates agree") {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Instance in = random_instance(17, i);
    const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
    const FilterOutput a = filter(ms.real_sys, in.data, -1, CovarianceUpdate::Joseph);
    const FilterOutput b = filter(ms.real_sys, in.data, -1, CovarianceUpdate::Standard);
    for (std::size_t t = 0; t < a.filtered.size(); ++t) {
      CHECK(max_abs(a.filtered[t].mean - b.filtered[t].mean) < 1e-9);
      CHECK(max_abs(a.filtered[t].cov - b.filtered[t].cov) < 1e-9);
    }
    CHECK(a.log_likelihood == doctest::Approx(b.log_likelihood).epsilon(1e-10));
  }
}

TEST_CASE("smoother recursion properties") {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Instance in = random_instance(23, i);
    const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
    const FilterOutput f = filter(ms.real_sys, in.data);
    const SmootherOutput s = smooth(f, ms.real_sys);
    const auto T = static_cast<std::size_t>(in.data.T());
    CHECK(max_abs(s.smoothed[T].mean - f.filtered[T].mean) == 0.0);
    CHECK(max_abs(s.smoothed[T].cov - f.filtered[T].cov) == 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      CHECK(test::psd(f.filtered[t].cov - s.smoothed[t].cov, 1e-12));
      CHECK(max_abs(s.lag_one_cov[t] - s.gains[t] * s.smoothed[t + 1].cov) < 1e-12);
    }
    for (std::size_t t = 1; t <= T; ++t) {
      CHECK(test::psd(f.predicted[t].cov - f.filtered[t].cov, 1e-12));
      CHECK(min_eigenvalue(f.innovation_cov[t]) > 0.0);
    }
  }
}

TEST_CASE("noiseless states follow the deterministic recursion") {
  test::Setup s = two_company_setup(3, DividendConvention::BookValue);
  s.params.Sigma_0.setZero();
  s.params.Sigma_ww.setZero();
  const ModelSystems ms = ModelSystems::build(s.params, s.data, DividendConvention::BookValue);
  const FilterOutput f = filter(ms.real_sys, s.data);
  Vec m = s.params.mu_0;
  for (int t = 0; t <= s.data.T(); ++t) {
    if (t > 0) m += s.params.C_m * s.data.psi_at(t);
    const StateBelief& b = f.filtered[static_cast<std::size_t>(t)];
    CHECK(max_abs(b.cov) < 1e-15);
    CHECK(max_abs(b.m() - m) < 1e-12);
  }
}

TEST_CASE("likelihood is invariant to the order of companies") {
  for (DividendConvention conv : {DividendConvention::BookValue, DividendConvention::MarketPrice}) {
    const test::Setup s = two_company_setup(11, conv);
    const test::Setup r = swap_companies(s);
    const ModelSystems a = ModelSystems::build(s.params, s.data, conv);
    const ModelSystems b = ModelSystems::build(r.params, r.data, conv);
    const double la = filter(a.real_sys, s.data).log_likelihood;
    const double lb = filter(b.real_sys, r.data).log_likelihood;
    CHECK(std::abs(la - lb) < 1e-8);
  }
}

TEST_CASE("forecast covariance is flat without state noise") {
  test::Setup s = two_company_setup(5, DividendConvention::BookValue);
  s.params.Sigma_ww.setZero();
  const ModelSystems ms = ModelSystems::build(s.params, s.data, DividendConvention::BookValue);
  const FilterOutput f = filter(ms.real_sys, s.data);
  FutureInputs fut;
  fut.psi = Mat::Ones(4, 1);
  fut.Delta_tilde = Mat::Constant(4, 2, std::log(0.04));
  fut.pays = BoolMat::Constant(4, 2, true);
  const ForecastOutput fc = forecast(f, s.params, s.data, DividendConvention::BookValue, fut);
  REQUIRE(fc.states.size() == 4);
  const Mat C = select::shift_C(2);
  const Mat expected = C * f.filtered.back().cov * C.transpose();
  for (const StateBelief& st : fc.states) CHECK(max_abs(st.cov - expected) < 1e-14);
  for (const Mat& yc : fc.y_cov) CHECK(test::psd(yc));
}

TEST_CASE("one-step forecast matches the filter prediction") {
  const test::Setup s = two_company_setup(8, DividendConvention::BookValue);
  const int T = s.data.T();
  PanelData head = s.data;
  head.psi = s.data.psi.topRows(T - 1);
  head.b_tilde = s.data.b_tilde.topRows(T - 1);
  head.z = s.data.z.topRows(T - 1);
  head.Delta_tilde = s.data.Delta_tilde.topRows(T - 1);
  head.pays_dividend = s.data.pays_dividend.topRows(T - 1);
  const ModelSystems hs = ModelSystems::build(s.params, head, DividendConvention::BookValue);
  const ModelSystems full = ModelSystems::build(s.params, s.data, DividendConvention::BookValue);
  FutureInputs fut;
  fut.psi = s.data.psi.bottomRows(1);
  fut.Delta_tilde = s.data.Delta_tilde.bottomRows(1);
  fut.pays = s.data.pays_dividend.bottomRows(1);
  const ForecastOutput fc = forecast(filter(hs.real_sys, head), s.params, head,
                                     DividendConvention::BookValue, fut);
  const FilterOutput f = filter(full.real_sys, s.data);
  const auto Ts = static_cast<std::size_t>(T);
  CHECK(max_abs(fc.states[0].mean - f.predicted[Ts].mean) < 1e-12);
  CHECK(max_abs(fc.states[0].cov - f.predicted[Ts].cov) < 1e-12);
}

}
