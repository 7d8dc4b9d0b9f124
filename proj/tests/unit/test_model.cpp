#include "doctest.h"
#include "helpers.hpp"

#include <cmath>

using namespace pcv;

TEST_SUITE("model") {

TEST_CASE("linearization point at phi = -ln 2") {
  const LinearizationPoint lp = linearize_phi(-std::log(2.0));
  CHECK(lp.g == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(std::abs(lp.mu) < 1e-15);
  CHECK(lp.h == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("linearization identities hold across the domain") {
  for (double phi : {-1e-6, -0.01, -0.5, -1.0, -3.0, -10.0}) {
    const LinearizationPoint lp = linearize_phi(phi);
    CHECK(lp.g > 1.0);
    CHECK(lp.g == doctest::Approx(1.0 + std::exp(lp.mu)).epsilon(1e-12));
    CHECK(lp.h == doctest::Approx(lp.g * (std::log(lp.g) - lp.mu) + lp.mu).epsilon(1e-10));
  }
}

TEST_CASE("nonnegative phi for a payer is rejected") {
  ModelDims d{1, 1, 1, 1, 2};
  test::Setup s = test::identity_setup(d);
  s.data.Delta_tilde.setZero();
  s.data.pays_dividend.setConstant(true);
  CHECK_THROWS_AS(linearization(s.params, s.data, DividendConvention::BookValue), PhiOutOfDomain);
}

TEST_CASE("non-payers linearize to g = 1 and h = 0") {
  ModelDims d{2, 1, 1, 1, 3};
  test::Setup s = test::identity_setup(d);
  const LinearizationParams lin = linearization(s.params, s.data, DividendConvention::BookValue);
  CHECK((lin.g.array() == 1.0).all());
  CHECK((lin.h.array() == 0.0).all());
}

TEST_CASE("book convention coefficients for a payer with g = 2") {
  ModelDims d{1, 1, 1, 1, 1};
  test::Setup s = test::identity_setup(d);
  s.data.pays_dividend.setConstant(true);
  s.data.Delta_tilde.setConstant(-std::log(2.0));
  const LinearizationParams lin = linearization(s.params, s.data, DividendConvention::BookValue);
  CHECK(lin.g(0, 0) == doctest::Approx(2.0));
  const RealSystemCoefficients rc = real_system(s.params, s.data, lin, DividendConvention::BookValue);
  CHECK(rc.nu_b(0, 0) == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  CHECK(rc.Psi_b_at(1)(0, 0) == -1.0);
  CHECK(rc.Psi_b_at(1)(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("without dividends both conventions give the same system") {
  ModelDims d{2, 1, 1, 2, 4};
  test::Setup s = test::identity_setup(d);
  s.params.C_k << 0.1, -0.2, 0.3, 0.05;
  s.data.psi.setRandom();
  const auto book = real_system(s.params, s.data, linearization(s.params, s.data, DividendConvention::BookValue),
                                DividendConvention::BookValue);
  const auto price = real_system(s.params, s.data, linearization(s.params, s.data, DividendConvention::MarketPrice),
                                 DividendConvention::MarketPrice);
  for (int t = 1; t <= d.T; ++t) {
    const Vec ck = s.params.C_k * s.data.psi_at(t);
    CHECK((book.nu_b.row(t - 1).transpose() - ck).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((book.Psi_b_at(t) - price.Psi_b_at(t)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((book.nu_b - price.nu_b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("recover_u inverts the measurement equation") {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Instance in = random_instance(7, i);
    const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
    const int n = in.data.n();
    Draws dr(11, i);
    for (int t = 1; t <= in.data.T(); ++t) {
      const Vec m_star = dr.normal_matrix(2 * n, 1);
      const Vec u = dr.normal_matrix(n, 1);
      PanelData data = in.data;
      const Vec b = ms.real.nu_b.row(t - 1).transpose() + ms.real.Psi_b_at(t) * m_star +
                    ms.real.G_at(t).cwiseProduct(u);
      data.b_tilde.row(t - 1) = b.transpose();
      CHECK((recover_u(ms.real, data, t, m_star) - u).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("validation accepts a well-formed model and flags defects") {
  ModelDims d{2, 1, 1, 1, 3};
  test::Setup s = test::identity_setup(d);
  CHECK(validate_model(d, s.params, s.data).ok);

  ModelParameters bad = s.params;
  bad.Sigma_ww(0, 0) = -0.1;
  CHECK_FALSE(validate_model(d, bad, s.data).ok);

  PanelData short_z = s.data;
  short_z.z0_star = Vec::Zero(3);
  CHECK_FALSE(validate_model(d, s.params, short_z).ok);

  PanelData zero_book = s.data;
  zero_book.B0(1) = 0.0;
  CHECK_FALSE(validate_model(d, s.params, zero_book).ok);
}

TEST_CASE("parameter packing round-trips") {
  const Instance in = random_instance(3, 4);
  ModelParameters p = ModelParameters::zeros(dims_of(in.params, in.data));
  p.unpack(in.params.pack());
  CHECK(p.pack() == in.params.pack());
  CHECK(p.pack().size() == in.params.packed_size());
}

TEST_CASE("panel accessors") {
  ModelDims d{1, 2, 2, 1, 3};
  test::Setup s = test::identity_setup(d);
  s.data.z0_star << 0.01, 0.5, 0.02, 0.6;  // z_0 then z_{-1}
  s.data.z << 0.03, 0.7, 0.04, 0.8, 0.05, 0.9;
  s.data.b_tilde << 0.1, 0.2, 0.3;
  CHECK(s.data.rate(1) == 0.01);
  CHECK(s.data.rate(2) == 0.03);
  CHECK(s.data.z_at(-1)(1) == 0.6);
  CHECK(s.data.z_star(1) == (Vec(4) << 0.03, 0.7, 0.01, 0.5).finished());
  CHECK(s.data.log_book(2)(0) == doctest::Approx(std::log(s.data.B0(0)) + 0.3));
  CHECK(s.data.log_discount(2) == doctest::Approx(-0.04));
}

}
