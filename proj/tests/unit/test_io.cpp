#include "doctest.h"
#include "helpers.hpp"

#include "pcv/io.hpp"

#include <cmath>
#include <limits>
#include <string>

using namespace pcv;
using test::max_abs;

namespace {

const std::string fixture = PCV_FIXTURE_DIR;

int error_line(const std::string& text) {
  try {
    parse_csv(text, "mem.csv");
  } catch (const ParseError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles print with round-trip precision") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    const std::string s = format_double(x);
    CHECK(parse_double(s, "mem", 1) == x);
  }
  CHECK(std::isnan(parse_double(format_double(std::nan("")), "mem", 1)));
  CHECK(parse_double(format_double(-std::numeric_limits<double>::infinity()), "mem", 1) < 0.0);
  CHECK_THROWS_AS(parse_double("1.5x", "mem", 3), ParseError);
  CHECK_THROWS_AS(parse_int("2.5", "mem", 3), ParseError);
}

TEST_CASE("CSV parsing handles quotes and reports line numbers") {
  const CsvTable t = parse_csv("a,b\n1,\"x,y\"\n\n2,\"say \"\"hi\"\"\"\n", "mem.csv");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[1][1] == "say \"hi\"");
  CHECK(t.lines[1] == 4);
  CHECK(t.column("b") == 1);
  CHECK(t.column("c") == -1);
  CHECK_THROWS_AS(t.require_column("c"), ParseError);

  CHECK(error_line("a,b\n1,2\n3\n") == 3);
  CHECK(error_line("a,b\n1,\"open\n") == 2);
}

TEST_CASE("CSV writer emits header and rows") {
  CsvWriter w({"t", "x"});
  w.cell(1).cell(0.5).end_row();
  w.cell(2).cell(std::string("q")).end_row();
  CHECK(w.str() == "t,x\n1,0.5\n2,q\n");
}

TEST_CASE("parameter files round-trip exactly") {
  const Instance in = random_instance(1, 2);
  const ModelParameters back = params_from_json(params_to_json(in.params), "mem.json");
  CHECK(back.pack() == in.params.pack());
  CHECK(back.A.cols() == in.params.A.cols());
  CHECK_THROWS(params_from_json("{\"C_k\": [[1]]}", "mem.json"));
}

TEST_CASE("configuration round-trips through its canonical text") {
  RunConfig c;
  c.convention = DividendConvention::MarketPrice;
  c.p = 2;
  c.panel = "data/panel.csv";
  c.seed = 17;
  c.tol = 1e-9;
  c.strikes = {0.9, 1.1};
  c.B0 = {1.0, 2.5};
  c.product = "ul-term";
  c.estimate_sigma0 = false;
  const std::string text = c.serialize();
  const RunConfig back = RunConfig::parse(text);
  CHECK(back == c);
  CHECK(back.serialize() == text);
  CHECK(RunConfig::parse(RunConfig().serialize()) == RunConfig());
}

TEST_CASE("configuration errors are reported") {
  CHECK_THROWS_AS(RunConfig::parse("seed = 1\nseed = 2\n"), ParseError);
  CHECK_THROWS_AS(RunConfig::parse("colour = red\n"), ParseError);
  CHECK_THROWS_AS(RunConfig::parse("p = two\n"), ParseError);
  try {
    RunConfig::parse("# comment\n\ntol = abc\n", "run.cfg");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(e.source == "run.cfg");
  }
}

TEST_CASE("bundled panel loads") {
  const LoadedPanel lp = load_panel({fixture + "/panel.csv", fixture + "/macro.csv", fixture + "/exog.csv"}, 1,
                                    (Vec(2) << 1.0, 2.0).finished());
  CHECK(lp.companies == std::vector<std::string>{"alpha", "beta"});
  CHECK(lp.data.T() == 46);
  CHECK(lp.data.last_observed() == 40);
  CHECK(lp.data.pays(1, 0));
  CHECK_FALSE(lp.data.pays(1, 1));
  CHECK(lp.data.pays(2, 1));
  CHECK(lp.data.Delta_tilde(1, 1) == doctest::Approx(std::log(0.06)).epsilon(1e-15));
  CHECK(lp.data.z0_star(0) == 0.02);
  const PanelData obs = observed_part(lp.data);
  CHECK(obs.T() == 40);
  CHECK(obs.b_tilde.allFinite());
}

TEST_CASE("panel gaps and unknown companies are rejected") {
  const CsvTable exog = parse_csv("t,psi1\n1,1\n2,1\n", "exog.csv");
  const CsvTable macro = parse_csv("t,z1\n0,0.01\n1,0.02\n2,0.02\n", "macro.csv");
  const CsvTable ok = parse_csv(
      "t,company,b_tilde,delta_tilde,pays_dividend\n1,a,0.1,,0\n2,a,0.2,-3,1\n", "panel.csv");
  const LoadedPanel lp = parse_panel(ok, macro, exog, 1, Vec::Ones(1));
  CHECK(lp.data.last_observed() == 2);
  const CsvTable gap = parse_csv(
      "t,company,b_tilde,delta_tilde,pays_dividend\n1,a,,,0\n2,a,0.2,-3,1\n", "panel.csv");
  CHECK_THROWS_AS(parse_panel(gap, macro, exog, 1, Vec::Ones(1)), Error);
  const CsvTable bad = parse_csv(
      "t,company,b_tilde,delta_tilde,pays_dividend\n1,a,0.1,,0\n2,a,oops,-3,1\n", "panel.csv");
  try {
    parse_panel(bad, macro, exog, 1, Vec::Ones(1));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("life table loads with either age header") {
  const LifeTable a = parse_life_table(parse_csv("x,t,tpx\n40,1,0.99\n41,1,0.98\n", "lt.csv"));
  const LifeTable b = parse_life_table(parse_csv("age,t,tpx\n40,1,0.99\n41,1,0.98\n", "lt.csv"));
  CHECK(a.survival(40, 2) == doctest::Approx(0.99 * 0.98));
  CHECK(a.entries() == b.entries());
  CHECK_THROWS(parse_life_table(parse_csv("x,t,tpx\n40,1,1.5\n", "lt.csv")));
}

}
