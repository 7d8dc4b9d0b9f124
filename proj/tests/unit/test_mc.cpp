#include "doctest.h"
#include "helpers.hpp"

#include <cmath>
#include <cstdlib>

using namespace pcv;
using test::max_abs;

namespace {

struct Sim {
  Instance inst;
  ModelSystems ms;
  StateBelief belief;
  static constexpr int t = 2;
  static constexpr int H = 5;
  explicit Sim(std::uint64_t seed)
      : inst(pricing_instance(seed, 8)), ms(ModelSystems::build(inst.params, inst.data, inst.conv)) {
    belief = filter(ms.rn_sys, ms.data).filtered[t];
  }
  SimConfig config(std::uint64_t pairs, std::uint64_t seed) const {
    SimConfig c;
    c.measure = MeasureSpec::risk_neutral();
    c.n_paths = pairs;
    c.seed = seed;
    c.t_start = t;
    c.horizon = H;
    return c;
  }
};

}  // namespace

TEST_SUITE("mc") {

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using P = Philox4x32;
  CHECK(P::block({0, 0, 0, 0}, {0, 0}) == P::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(P::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        P::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(P::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        P::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal streams are reproducible and independent across streams") {
  NormalStream a(42, 7), b(42, 7), c(42, 8);
  double same = 0.0, diff = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.next(), y = b.next(), z = c.next();
    same = std::max(same, std::abs(x - y));
    diff = std::max(diff, std::abs(x - z));
  }
  CHECK(same == 0.0);
  CHECK(diff > 0.0);
}

TEST_CASE("normal draws have unit moments") {
  NormalStream ns(1, 0);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = ns.next();
    s1 += x;
    s2 += x * x;
  }
  CHECK(std::abs(s1 / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("constant payoff has zero standard error") {
  const Sim s(1);
  const Simulator sim(s.ms, s.ms.rn_sys, s.belief, s.H);
  const Estimate e = estimate(sim, s.config(500, 9), 2, [](const SimPath&, Eigen::Ref<Vec> out) {
    out << 3.5, -1.0;
  });
  CHECK(e.mean(0) == 3.5);
  CHECK(e.mean(1) == -1.0);
  CHECK(max_abs(e.se) == 0.0);
  CHECK(e.n == 500);
}

TEST_CASE("estimates do not depend on the worker count") {
  const Sim s(2);
  const Simulator sim(s.ms, s.ms.rn_sys, s.belief, s.H);
  const Payoff pay = [](const SimPath& p, Eigen::Ref<Vec> out) { out(0) = std::exp(p.log_price(5)(0)); };
  setenv("PCV_THREADS", "1", 1);
  const Estimate one = estimate(sim, s.config(4000, 3), 1, pay);
  setenv("PCV_THREADS", "4", 1);
  const Estimate four = estimate(sim, s.config(4000, 3), 1, pay);
  unsetenv("PCV_THREADS");
  CHECK(one.mean(0) == four.mean(0));
  CHECK(one.se(0) == four.se(0));
}

TEST_CASE("standard error shrinks with the square root of the sample") {
  const Estimate small = estimate_draws(10000, 5, 1, [](NormalStream& ns, Eigen::Ref<Vec> out) {
    out(0) = std::exp(ns.next());
  });
  const Estimate large = estimate_draws(160000, 5, 1, [](NormalStream& ns, Eigen::Ref<Vec> out) {
    out(0) = std::exp(ns.next());
  });
  CHECK(small.se(0) / large.se(0) == doctest::Approx(4.0).epsilon(0.15));
  CHECK(std::abs(large.mean(0) - std::exp(0.5)) < 4.0 * large.se(0));
}

TEST_CASE("simulated bond matches its closed form") {
  const Sim s(3);
  const Simulator sim(s.ms, s.ms.rn_sys, s.belief, s.H);
  const Estimate e = estimate(sim, s.config(50000, 11), 1, [](const SimPath& p, Eigen::Ref<Vec> out) {
    out(0) = p.discount(2, 5);
  });
  const PathLaw law(s.ms.rn_sys, s.ms.data, s.belief, s.H);
  CHECK(std::abs(law.bond(5) - e.mean(0)) < 4.0 * e.se(0));
}

TEST_CASE("paths without noise are deterministic") {
  Sim s(4);
  s.ms.rn_sys.Sigma_xi.setZero();
  s.belief.cov.setZero();
  const Simulator sim(s.ms, s.ms.rn_sys, s.belief, s.H);
  SimConfig cfg = s.config(3, 1);
  const PathSet set = simulate(sim, cfg);
  REQUIRE(set.paths.size() == 6);
  for (const SimPath& p : set.paths) {
    CHECK(max_abs(p.m - set.paths[0].m) == 0.0);
    CHECK(max_abs(p.log_book - set.paths[0].log_book) == 0.0);
  }
}

TEST_CASE("path generation is reproducible") {
  const Sim s(5);
  const Simulator sim(s.ms, s.ms.rn_sys, s.belief, s.H);
  SimPath a, b;
  sim.path(77, 12, false, a);
  sim.path(77, 12, false, b);
  CHECK(max_abs(a.m - b.m) == 0.0);
  CHECK(max_abs(a.z - b.z) == 0.0);
  sim.path(77, 12, true, b);
  CHECK(max_abs(a.m - b.m) > 0.0);
}

}
