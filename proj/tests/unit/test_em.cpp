#include "doctest.h"
#include "helpers.hpp"

#include <cmath>

using namespace pcv;
using test::max_abs;

namespace {

ModelParameters shift_means(const ModelParameters& p, Eigen::Index j, double h) {
  ModelParameters out = p;
  const Eigen::Index n = p.n(), k = p.C_k.size();
  if (j < n)
    out.mu_0(j) += h;
  else if (j < n + k)
    out.C_k.reshaped()(j - n) += h;
  else
    out.C_m.reshaped()(j - n - k) += h;
  return out;
}

test::Setup no_dividend_setup() {
  ModelDims d{2, 1, 1, 2, 30};
  test::Setup s = test::identity_setup(d);
  Draws dr(99, 0);
  s.data.psi.col(1) = dr.normal_matrix(d.T, 1);
  s.params.C_k << 0.03, 0.01, 0.02, -0.01;
  s.params.C_m << 0.0, 0.01, 0.01, 0.0;
  s.params.Sigma_eta << 0.01, 0.002, 0.0, 0.002, 0.02, 0.0, 0.0, 0.0, 0.0004;
  s.params.Sigma_ww << 0.003, 0.0, 0.0, 0.002;
  simulate_panel(s.params, s.data, DividendConvention::BookValue, 4);
  return s;
}

}  // namespace

TEST_SUITE("em") {

TEST_CASE("analytic mean gradient matches finite differences of Q") {
  for (DividendConvention conv : {DividendConvention::BookValue, DividendConvention::MarketPrice}) {
    Instance in = em_dataset(31, 0, 60);
    ModelParameters p = in.params;
    p.mu_0(0) += 0.05;
    p.C_k(0, 0) += 0.01;
    p.C_m(0, 0) += 0.002;
    const ModelSystems ms = ModelSystems::build(p, in.data, conv);
    const FilterOutput f = filter(ms.real_sys, in.data);
    const SmootherMoments mom = SmootherMoments::from(smooth(f, ms.real_sys));
    const EStepQuantities q = noise_quantities(p, in.data, conv, mom);
    const Vec g = mean_gradient(q, p, in.data, conv);
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double h = 1e-5;
      const double fd = (q_function(shift_means(p, j, h), in.data, conv, mom) -
                         q_function(shift_means(p, j, -h), in.data, conv, mom)) / (2 * h);
      CHECK(fd == doctest::Approx(g(j)).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("E-step likelihood equals the filter likelihood") {
  const Instance in = em_dataset(7, 1, 50);
  const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
  const EStepQuantities q = e_step(in.params, in.data, in.conv);
  CHECK(q.log_likelihood == doctest::Approx(filter(ms.real_sys, in.data).log_likelihood).epsilon(1e-12));
}

TEST_CASE("without dividends the dividend multipliers vanish and both conventions agree") {
  const test::Setup s = no_dividend_setup();
  const EStepQuantities qb = e_step(s.params, s.data, DividendConvention::BookValue);
  const EStepQuantities qp = e_step(s.params, s.data, DividendConvention::MarketPrice);
  CHECK(max_abs(qb.alpha) == 0.0);
  const MeanUpdate a = m_step_book(qb, s.params, s.data);
  const MeanUpdate b = m_step_price(qp, s.params, s.data);
  CHECK(max_abs(a.C_k - b.C_k) < 1e-10);
  CHECK(max_abs(a.C_m - b.C_m) < 1e-10);
  CHECK(max_abs(a.mu_0 - qb.moments.mean[0].head(2)) < 1e-10);
}

TEST_CASE("VAR block is ordinary least squares when shocks are uncorrelated") {
  const test::Setup s = no_dividend_setup();
  const EStepQuantities q = e_step(s.params, s.data, DividendConvention::BookValue);
  const Mat est = m_step_var(q, s.params, s.data);
  const int T = s.data.T();
  Mat X(T, 3);
  Mat y(T, 1);
  for (int t = 1; t <= T; ++t) {
    X.row(t - 1) << s.data.psi_at(t).transpose(), s.data.z_at(t - 1)(0);
    y(t - 1, 0) = s.data.z_at(t)(0);
  }
  const Mat ols = (X.transpose() * X).ldlt().solve(X.transpose() * y).transpose();
  CHECK(max_abs(est - ols) < 1e-12);
}

TEST_CASE("covariance updates are symmetric and positive semidefinite") {
  const Instance in = em_dataset(3, 2, 80);
  const EStepQuantities q = e_step(in.params, in.data, in.conv);
  const CovUpdate c = m_step_cov(q, in.params);
  for (const Mat* m : {&c.Sigma_eta, &c.Sigma_ww, &c.Sigma_0}) {
    CHECK(max_abs(*m - m->transpose()) < 1e-15);
    CHECK(test::psd(*m));
  }
}

TEST_CASE("EM increases the likelihood and reaches a stationary point") {
  const Instance in = em_dataset(20240601, 3, 120);
  EMOptions opts;
  opts.tol = 1e-12;
  opts.max_iter = 3000;
  opts.estimate_Sigma_0 = false;
  const EMResult r = em_run(initial_parameters(in.data), in.data, in.conv, opts);
  CHECK(r.trace.converged);
  CHECK_FALSE(r.trace.likelihood_decrease);
  const auto& it = r.trace.iterations;
  for (std::size_t i = 1; i < it.size(); ++i)
    CHECK(it[i].log_likelihood >= it[i - 1].log_likelihood - 1e-8 * std::abs(it[i - 1].log_likelihood));

  const ModelSystems ms = ModelSystems::build(r.params, in.data, in.conv);
  const SmootherMoments mom = SmootherMoments::from(smooth(filter(ms.real_sys, in.data), ms.real_sys));
  for (const BlockGradient& g : q_gradient_fd(r.params, in.data, in.conv, mom))
    if (g.block != "Sigma_0") CHECK_MESSAGE(g.max_abs <= 1e-4, g.block);
}

TEST_CASE("unaccelerated EM is monotone step by step") {
  const Instance in = em_dataset(5, 4, 60);
  EMOptions opts;
  opts.accelerate = false;
  opts.max_iter = 30;
  const EMResult r = em_run(initial_parameters(in.data), in.data, in.conv, opts);
  const auto& it = r.trace.iterations;
  REQUIRE(it.size() >= 2);
  for (std::size_t i = 1; i < it.size(); ++i)
    CHECK(it[i].log_likelihood >= it[i - 1].log_likelihood - 1e-8 * std::abs(it[i - 1].log_likelihood));
}

TEST_CASE("smoothed values scale book values") {
  const Instance in = em_dataset(9, 0, 20);
  const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
  const SmootherOutput s = smooth(filter(ms.real_sys, in.data), ms.real_sys);
  const Mat V = smoothed_value(s, in.data);
  for (int t = 1; t <= in.data.T(); ++t) {
    const double expected = std::exp(s.smoothed[static_cast<std::size_t>(t)].mean(0) + in.data.log_book(t)(0));
    CHECK(V(t, 0) == doctest::Approx(expected).epsilon(1e-14));
  }
}

}
