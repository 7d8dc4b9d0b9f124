#include "doctest.h"
#include "helpers.hpp"

#include "pcv/verify.hpp"

#include <cmath>

using namespace pcv;
using test::max_abs;

namespace {

struct Priced {
  Instance inst;
  ModelSystems ms;
  StateBelief belief;
  static constexpr int t = 2;
  static constexpr int T = 6;
  explicit Priced(std::uint64_t seed)
      : inst(pricing_instance(seed, 8)), ms(ModelSystems::build(inst.params, inst.data, inst.conv)) {
    belief = filter(ms.rn_sys, ms.data).filtered[t];
  }
};

LifeTable table_from(int age, int years, double px) {
  LifeTable lt;
  for (int x = age; x < age + years; ++x) lt.set(x, 1, px);
  return lt;
}

}  // namespace

TEST_SUITE("pricing") {

TEST_CASE("standard lognormal call against quadrature") {
  const CallPut cp = lognormal_call_put(0.0, 1.0, 1.0);
  CHECK(std::abs(cp.call - call_by_quadrature(0.0, 1.0, 1.0)) < 1e-10);
  CHECK(std::abs(cp.call - 0.8871429788) < 1e-9);
  CHECK(std::abs(cp.call - (std::exp(0.5) * norm_cdf(1.0) - 0.5)) < 1e-15);
}

TEST_CASE("lognormal call and put across parameters") {
  for (double mu : {-0.5, 0.0, 0.3})
    for (double sigma : {0.05, 0.4, 1.5})
      for (double K : {0.2, 1.0, 3.0}) {
        const CallPut cp = lognormal_call_put(mu, sigma * sigma, K);
        const double quad = call_by_quadrature(mu, sigma, K);
        CHECK(std::abs(cp.call - quad) < 1e-9 * std::max(1.0, quad));
        const double fwd = std::exp(mu + 0.5 * sigma * sigma);
        CHECK(std::abs(cp.call - cp.put - (fwd - K)) < 1e-12 * std::max(1.0, fwd));
        CHECK(cp.call >= 0.0);
        CHECK(cp.put >= 0.0);
      }
}

TEST_CASE("lognormal prices at vanishing strike and variance") {
  const CallPut tiny = lognormal_call_put(0.1, 0.04, 1e-300);
  CHECK(tiny.call == doctest::Approx(std::exp(0.12)).epsilon(1e-14));
  CHECK(tiny.put < 1e-300);
  CHECK_THROWS_AS(lognormal_call_put(0.0, 0.0, 1.0), DegenerateVariance);
  CHECK_THROWS_AS(lognormal_call_put(0.0, -1.0, 1.0), DegenerateVariance);
}

TEST_CASE("one-period bond is the known discount factor") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Priced p(seed);
    const PathLaw law(p.ms.rn_sys, p.ms.data, p.belief, p.T);
    CHECK(law.bond(p.t + 1) == doctest::Approx(std::exp(-p.ms.data.rate(p.t + 1))).epsilon(1e-15));
    for (int u = p.t + 2; u <= p.T; ++u) CHECK(law.bond(u) > 0.0);
    CHECK_THROWS(law.bond(p.t));
  }
}

TEST_CASE("forward measure for the next date leaves means unchanged") {
  const Priced p(4);
  const PathLaw law(p.ms.rn_sys, p.ms.data, p.belief, p.T);
  const ForwardShift fs = forward_shift(p.ms.rn_sys, law, p.t + 1);
  for (int s = p.t + 1; s <= p.T; ++s)
    CHECK(max_abs(fs.shifted_mean[static_cast<std::size_t>(s - p.t - 1)] - law.x_mean(s)) < 1e-15);
}

TEST_CASE("put-call parity for model options") {
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    const Priced p(seed);
    const PathLaw law(p.ms.rn_sys, p.ms.data, p.belief, p.T);
    for (int T = p.t + 1; T <= p.T; ++T) {
      const TerminalLogPriceDist d = terminal_log_price_dist(law, T, T);
      const Vec fwd = (d.mean.array() + 0.5 * d.cov.diagonal().array()).exp();
      const Vec K = 0.9 * fwd;
      const Vec call = option_price(OptionKind::Call, K, T, law);
      const Vec put = option_price(OptionKind::Put, K, T, law);
      const Vec parity = law.bond(T) * (fwd - K);
      CHECK(max_abs(call - put - parity) < 1e-12);
    }
  }
}

TEST_CASE("life table products") {
  LifeTable lt;
  for (int x = 40; x < 50; ++x) lt.set(x, 1, 0.99 - 0.01 * (x - 40));
  CHECK(lt.survival(40, 0) == 1.0);
  CHECK(lt.survival(40, 2) == doctest::Approx(0.99 * 0.98).epsilon(1e-15));
  CHECK(lt.death(41) == doctest::Approx(0.02).epsilon(1e-15));
  double total = lt.survival(42, 5);
  for (int k = 2; k < 7; ++k) total += lt.deferred_death(40, 2, k);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("insurance premium identities") {
  const Priced p(8);
  const int t = p.t, T = p.T, age = 40;
  const PathLaw law(p.ms.rn_sys, p.ms.data, p.belief, T);
  const TerminalLogPriceDist d = terminal_log_price_dist(law, T, T);
  const Vec K = (d.mean.array() + 0.5 * d.cov.diagonal().array()).exp();
  const Vec one = Vec::Ones(K.size());

  const LifeTable certain = table_from(age, T + 1, 1.0);
  const Vec seg = insurance_premium(InsuranceSpec::constant(InsuranceProduct::SegregatedEndowment, one, K, age, T),
                                    certain, law);
  CHECK(max_abs(seg - option_price(OptionKind::Put, K, T, law)) < 1e-12);
  const Vec term = insurance_premium(InsuranceSpec::constant(InsuranceProduct::SegregatedTerm, one, K, age, T),
                                     certain, law);
  CHECK(max_abs(term) == 0.0);

  const LifeTable mortal = table_from(age, T + 1, 0.97);
  const Vec F = 1.5 * one, G = 1.2 * K;
  const Vec ul = insurance_premium(InsuranceSpec::constant(InsuranceProduct::UnitLinkedEndowment, F, G, age, T),
                                   mortal, law);
  const Vec sg = insurance_premium(InsuranceSpec::constant(InsuranceProduct::SegregatedEndowment, F, G, age, T),
                                   mortal, law);
  const Vec fwd = (d.mean.array() + 0.5 * d.cov.diagonal().array()).exp();
  const Vec expected = mortal.survival(age + t, T - t) * law.bond(T) * F.cwiseProduct(fwd);
  CHECK(max_abs(ul - sg - expected) < 1e-12);

  const Vec sg2 = insurance_premium(
      InsuranceSpec::constant(InsuranceProduct::SegregatedEndowment, 2 * F, 2 * G, age, T), mortal, law);
  CHECK(max_abs(sg2 - 2 * sg) < 1e-13);
  for (InsuranceProduct prod : {InsuranceProduct::SegregatedTerm, InsuranceProduct::UnitLinkedTerm}) {
    const Vec v = insurance_premium(InsuranceSpec::constant(prod, F, G, age, T), mortal, law);
    CHECK((v.array() >= 0.0).all());
  }
}

TEST_CASE("product names round-trip") {
  for (InsuranceProduct prod : {InsuranceProduct::SegregatedTerm, InsuranceProduct::SegregatedEndowment,
                                InsuranceProduct::UnitLinkedTerm, InsuranceProduct::UnitLinkedEndowment})
    CHECK(insurance_product_from_string(to_string(prod)) == prod);
  CHECK_THROWS(insurance_product_from_string("annuity"));
}

}
