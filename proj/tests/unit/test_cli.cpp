#include "doctest.h"
#include "helpers.hpp"

#include "cli.hpp"
#include "pcv/io.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace pcv;

namespace {

const std::string fixture = PCV_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pcv_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "pcv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::vector<std::string> base(const fs::path& out) {
  return {"--config", fixture + "/fixture.cfg", "--out", out.string()};
}

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& more) {
  a.insert(a.end(), more.begin(), more.end());
  return a;
}

double cell(const CsvTable& t, std::size_t row, const std::string& col) {
  return parse_double(t.rows[row][static_cast<std::size_t>(t.require_column(col))], t.source, 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("estimate writes parameters and a monotone trace") {
  const fs::path out = scratch("estimate");
  CHECK(run(with(base(out), {"estimate", "--set", "params=", "--max-iter", "40", "--tol", "1e-6"})) == 0);
  const ModelParameters p = load_params((out / "params.json").string());
  CHECK(p.n() == 2);
  CHECK(p.ell() == 1);
  const CsvTable trace = read_csv((out / "em_trace.csv").string());
  REQUIRE(trace.rows.size() >= 2);
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const double prev = cell(trace, i - 1, "log_likelihood");
    CHECK(cell(trace, i, "log_likelihood") >= prev - 1e-8 * std::abs(prev));
  }
}

TEST_CASE("value equals book value when the price-to-book state is zero") {
  const fs::path out = scratch("value");
  ModelParameters p = load_params(fixture + "/params.json");
  p.mu_0.setZero();
  p.C_m.setZero();
  p.Sigma_0.setZero();
  p.Sigma_ww.setZero();
  fs::create_directories(out);
  write_text_file((out / "zero.json").string(), params_to_json(p));
  CHECK(run(with(base(out), {"value", "--params", (out / "zero.json").string()})) == 0);
  const CsvTable v = read_csv((out / "value.csv").string());
  CHECK(v.rows.size() == 41 * 2);
  for (std::size_t r = 0; r < v.rows.size(); ++r) {
    CHECK(std::abs(cell(v, r, "m_smoothed")) < 1e-12);
    CHECK(cell(v, r, "value") == doctest::Approx(cell(v, r, "book_value")).epsilon(1e-12));
  }
}

TEST_CASE("smooth and forecast produce reports") {
  const fs::path out = scratch("smooth");
  CHECK(run(with(base(out), {"smooth"})) == 0);
  CHECK(read_csv((out / "smoothed.csv").string()).rows.size() == 41 * 2);
  CHECK(run(with(base(out), {"forecast"})) == 0);
  const CsvTable f = read_csv((out / "forecast.csv").string());
  CHECK(f.rows.size() == 6 * 5);
  for (std::size_t r = 0; r < f.rows.size(); ++r) CHECK(cell(f, r, "variance") >= 0.0);
}

TEST_CASE("option report satisfies put-call parity") {
  const fs::path out = scratch("option");
  CHECK(run(with(base(out), {"price-option", "--t", "38", "--maturity", "43", "--strikes", "2.5,3.5"})) == 0);
  const CsvTable t = read_csv((out / "option_prices.csv").string());
  REQUIRE(t.rows.size() == 2);
  for (std::size_t r = 0; r < 2; ++r) {
    const double parity = cell(t, r, "bond") * (cell(t, r, "forward") - cell(t, r, "strike"));
    CHECK(std::abs(cell(t, r, "call") - cell(t, r, "put") - parity) < 1e-12);
  }
}

TEST_CASE("insurance, hedge and simulate run on the fixture") {
  const fs::path out = scratch("misc");
  CHECK(run(with(base(out), {"price-insurance", "--maturity", "45", "--product", "ul-endow", "--age", "45",
                             "--guarantee", "2,3"})) == 0);
  const CsvTable ins = read_csv((out / "insurance_premiums.csv").string());
  REQUIRE(ins.rows.size() == 2);
  CHECK(cell(ins, 0, "premium") > 0.0);

  CHECK(run(with(base(out), {"hedge", "--t", "30", "--maturity", "36", "--claim", "put", "--strikes", "3"})) == 0);
  const CsvTable h = read_csv((out / "hedge.csv").string());
  CHECK(h.rows.size() == 7 * 2);

  CHECK(run(with(base(out), {"simulate", "--measure", "risk-neutral", "--t", "40", "--horizon", "3", "--paths",
                             "10"})) == 0);
  CHECK(read_csv((out / "paths.csv").string()).rows.size() == 10 * 4);
}

TEST_CASE("failures return machine-readable exit codes") {
  const fs::path out = scratch("errors");
  CHECK(run({"no-such-command"}) == 2);
  CHECK(run(with(base(out), {"value", "--params", fixture + "/missing.json"})) != 0);
  CHECK(run(with(base(out), {"price-option", "--maturity", "99", "--strikes", "1"})) == 3);
  CHECK(run(with(base(out), {"estimate", "--set", "colour=red"})) == 2);
  fs::create_directories(out);
  write_text_file((out / "bad.cfg").string(), "seed = 1\nseed = 2\n");
  CHECK(run({"--config", (out / "bad.cfg").string(), "smooth"}) == 2);
}

}
