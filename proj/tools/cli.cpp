#include "cli.hpp"

#include "pcv/em.hpp"
#include "pcv/hedging.hpp"
#include "pcv/io.hpp"
#include "pcv/mc.hpp"
#include "pcv/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pcv;

namespace {

struct Context {
  RunConfig cfg;
  std::set<std::string> explicit_keys;  // set by file or command line
};

void emit(const json& j) { std::cout << j.dump() << "\n"; }

std::string out_path(const Context& c, const std::string& name) {
  fs::create_directories(c.cfg.out);
  return (fs::path(c.cfg.out) / name).string();
}

Vec to_vec(const std::vector<double>& v) {
  return v.empty() ? Vec() : Vec(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
}

Vec per_company(const std::vector<double>& v, int n, double fallback, const char* key) {
  if (v.empty()) return Vec::Constant(n, fallback);
  if (v.size() == 1) return Vec::Constant(n, v[0]);
  if (static_cast<int>(v.size()) != n)
    throw Error(std::string(key) + " needs 1 or " + std::to_string(n) + " entries");
  return to_vec(v);
}

LoadedPanel load(const Context& c) {
  return load_panel({c.cfg.panel, c.cfg.macro, c.cfg.exog}, c.cfg.p, to_vec(c.cfg.B0));
}

ModelParameters require_params(const Context& c) {
  if (c.cfg.params.empty()) throw Error("--params is required for this command");
  return load_params(c.cfg.params);
}

int valuation_date(const Context& c, const PanelData& data, int fallback) {
  const int t = c.cfg.t < 0 ? fallback : c.cfg.t;
  if (t < 0 || t > data.last_observed())
    throw Error("t must lie in 0.." + std::to_string(data.last_observed()) + " (observed sample)");
  return t;
}

int cmd_estimate(const Context& c) {
  const LoadedPanel lp = load(c);
  const PanelData data = observed_part(lp.data);
  const ModelParameters theta0 = c.cfg.params.empty() ? initial_parameters(data) : load_params(c.cfg.params);
  EMOptions o;
  o.tol = c.cfg.tol;
  o.max_iter = c.cfg.max_iter;
  o.estimate_Sigma_0 = c.cfg.estimate_sigma0;
  const EMResult r = em_run(theta0, data, c.cfg.convention, o);
  CsvWriter trace({"iteration", "log_likelihood", "max_change"});
  for (const auto& it : r.trace.iterations)
    trace.cell(it.iteration).cell(it.log_likelihood).cell(it.max_change).end_row();
  write_text_file(out_path(c, "em_trace.csv"), trace.str());
  write_text_file(out_path(c, "params.json"), params_to_json(r.params));
  emit({{"command", "estimate"},
        {"converged", r.trace.converged},
        {"iterations", r.trace.iterations.size()},
        {"log_likelihood", r.trace.final_log_likelihood},
        {"likelihood_decrease", r.trace.likelihood_decrease},
        {"phi_projections", r.trace.phi_projections},
        {"params", out_path(c, "params.json")},
        {"trace", out_path(c, "em_trace.csv")}});
  return 0;
}

int cmd_smooth(const Context& c, bool value) {
  const LoadedPanel lp = load(c);
  const PanelData data = observed_part(lp.data);
  const ModelParameters params = require_params(c);
  const ModelSystems ms = ModelSystems::build(params, data, c.cfg.convention);
  const FilterOutput f = filter(ms.real_sys, data);
  const SmootherOutput s = smooth(f, ms.real_sys);
  const int n = data.n();
  if (value) {
    const Mat V = smoothed_value(s, data);
    CsvWriter w({"t", "company", "m_smoothed", "book_value", "value"});
    for (int t = 0; t <= data.T(); ++t) {
      const Vec B = data.log_book(t).array().exp();
      for (int i = 0; i < n; ++i)
        w.cell(t).cell(lp.companies[static_cast<std::size_t>(i)])
            .cell(s.smoothed[static_cast<std::size_t>(t)].mean(i)).cell(B(i)).cell(V(t, i)).end_row();
    }
    write_text_file(out_path(c, "value.csv"), w.str());
    emit({{"command", "value"}, {"rows", (data.T() + 1) * n}, {"report", out_path(c, "value.csv")}});
    return 0;
  }
  CsvWriter w({"t", "company", "m_filtered", "var_filtered", "m_smoothed", "var_smoothed"});
  for (int t = 0; t <= data.T(); ++t) {
    const auto& fb = f.filtered[static_cast<std::size_t>(t)];
    const auto& sb = s.smoothed[static_cast<std::size_t>(t)];
    for (int i = 0; i < n; ++i)
      w.cell(t).cell(lp.companies[static_cast<std::size_t>(i)])
          .cell(fb.mean(i)).cell(fb.cov(i, i)).cell(sb.mean(i)).cell(sb.cov(i, i)).end_row();
  }
  write_text_file(out_path(c, "smoothed.csv"), w.str());
  emit({{"command", "smooth"},
        {"log_likelihood", f.log_likelihood},
        {"report", out_path(c, "smoothed.csv")}});
  return 0;
}

int cmd_forecast(const Context& c) {
  const LoadedPanel lp = load(c);
  const PanelData data = observed_part(lp.data);
  const int T = data.T(), H = lp.data.T() - T;
  if (H < 1) throw Error("forecast needs exogenous rows beyond the last observed date");
  const ModelParameters params = require_params(c);
  const ModelSystems ms = ModelSystems::build(params, data, c.cfg.convention);
  const FilterOutput f = filter(ms.real_sys, data);
  FutureInputs fut{lp.data.psi.bottomRows(H), lp.data.Delta_tilde.bottomRows(H),
                   lp.data.pays_dividend.bottomRows(H)};
  const ForecastOutput fc = forecast(f, params, data, c.cfg.convention, fut);
  const int n = data.n(), ell = data.ell();
  CsvWriter w({"t", "variable", "mean", "variance"});
  for (int h = 0; h < H; ++h) {
    const int t = T + 1 + h;
    const Vec& ym = fc.y_mean[static_cast<std::size_t>(h)];
    const Mat& yc = fc.y_cov[static_cast<std::size_t>(h)];
    const StateBelief& sb = fc.states[static_cast<std::size_t>(h)];
    for (int i = 0; i < n; ++i)
      w.cell(t).cell("b_tilde:" + lp.companies[static_cast<std::size_t>(i)]).cell(ym(i)).cell(yc(i, i)).end_row();
    for (int j = 0; j < ell; ++j)
      w.cell(t).cell("z" + std::to_string(j + 1)).cell(ym(n + j)).cell(yc(n + j, n + j)).end_row();
    for (int i = 0; i < n; ++i)
      w.cell(t).cell("m_tilde:" + lp.companies[static_cast<std::size_t>(i)]).cell(sb.mean(i)).cell(sb.cov(i, i)).end_row();
  }
  write_text_file(out_path(c, "forecast.csv"), w.str());
  emit({{"command", "forecast"}, {"origin", T}, {"horizon", H}, {"report", out_path(c, "forecast.csv")}});
  return 0;
}

struct PricingContext {
  LoadedPanel lp;
  ModelSystems ms;
  StateBelief belief;
  int t;
};

PricingContext pricing_context(const Context& c) {
  LoadedPanel lp = load(c);
  const ModelParameters params = require_params(c);
  ModelSystems ms = ModelSystems::build(params, lp.data, c.cfg.convention);
  const int t = valuation_date(c, lp.data, lp.data.last_observed());
  const FilterOutput f = filter(ms.rn_sys, ms.data, t);
  StateBelief b = f.filtered[static_cast<std::size_t>(t)];
  return {std::move(lp), std::move(ms), std::move(b), t};
}

int require_maturity(const Context& c, const PricingContext& pc) {
  const int T = c.cfg.maturity;
  if (T <= pc.t || T > pc.ms.data.T())
    throw Error("maturity must lie in " + std::to_string(pc.t + 1) + ".." + std::to_string(pc.ms.data.T()) +
                " (extend the exogenous file to price further out)");
  return T;
}

int cmd_price_option(const Context& c) {
  const PricingContext pc = pricing_context(c);
  const int T = require_maturity(c, pc), n = pc.ms.data.n();
  if (c.cfg.strikes.empty()) throw Error("--strikes is required");
  const Vec K = per_company(c.cfg.strikes, n, 1.0, "strikes");
  const PathLaw law(pc.ms.rn_sys, pc.ms.data, pc.belief, T);
  const TerminalLogPriceDist dist = terminal_log_price_dist(law, T, T);
  const Vec call = option_price(OptionKind::Call, K, T, law);
  const Vec put = option_price(OptionKind::Put, K, T, law);
  const double B = law.bond(T);
  CsvWriter w({"company", "t", "maturity", "strike", "bond", "forward", "call", "put"});
  for (int i = 0; i < n; ++i)
    w.cell(pc.lp.companies[static_cast<std::size_t>(i)]).cell(pc.t).cell(T).cell(K(i)).cell(B)
        .cell(std::exp(dist.mean(i) + 0.5 * dist.cov(i, i))).cell(call(i)).cell(put(i)).end_row();
  write_text_file(out_path(c, "option_prices.csv"), w.str());
  emit({{"command", "price-option"}, {"t", pc.t}, {"maturity", T}, {"report", out_path(c, "option_prices.csv")}});
  return 0;
}

int cmd_price_insurance(const Context& c) {
  const PricingContext pc = pricing_context(c);
  const int T = require_maturity(c, pc), n = pc.ms.data.n();
  if (c.cfg.lifetable.empty()) throw Error("--lifetable is required");
  const LifeTable table = load_life_table(c.cfg.lifetable);
  const InsuranceProduct product = insurance_product_from_string(c.cfg.product);
  const InsuranceSpec spec = InsuranceSpec::constant(product, per_company(c.cfg.fund_units, n, 1.0, "fund_units"),
                                                     per_company(c.cfg.guarantee, n, 1.0, "guarantee"),
                                                     c.cfg.age, T);
  const PathLaw law(pc.ms.rn_sys, pc.ms.data, pc.belief, T);
  const Vec premium = insurance_premium(spec, table, law);
  CsvWriter w({"company", "product", "maturity", "t", "age", "fund_units", "guarantee", "premium"});
  for (int i = 0; i < n; ++i)
    w.cell(pc.lp.companies[static_cast<std::size_t>(i)]).cell(c.cfg.product).cell(T).cell(pc.t)
        .cell(c.cfg.age).cell(spec.F(1)(i)).cell(spec.G(1)(i)).cell(premium(i)).end_row();
  write_text_file(out_path(c, "insurance_premiums.csv"), w.str());
  emit({{"command", "price-insurance"}, {"t", pc.t}, {"maturity", T},
        {"report", out_path(c, "insurance_premiums.csv")}});
  return 0;
}

int cmd_hedge(const Context& c) {
  const LoadedPanel lp = load(c);
  const PanelData data = observed_part(lp.data);
  const ModelParameters params = require_params(c);
  const ModelSystems ms = ModelSystems::build(params, data, c.cfg.convention);
  const int n = data.n(), T = c.cfg.maturity;
  const int t0 = c.cfg.t < 0 ? 0 : c.cfg.t;
  if (T < 1 || T > data.T()) throw Error("maturity must lie in 1.." + std::to_string(data.T()) + " (observed sample)");
  const FilterOutput f = filter(ms.rn_sys, data);
  const ClaimKind kind = claim_kind_from_string(c.cfg.claim);
  LifeTable table;
  ClaimSpec claim;
  if (kind == ClaimKind::Call || kind == ClaimKind::Put) {
    if (c.cfg.strikes.empty()) throw Error("--strikes is required for option claims");
    claim = ClaimSpec::option(kind, per_company(c.cfg.strikes, n, 1.0, "strikes"), T);
  } else {
    if (c.cfg.lifetable.empty()) throw Error("--lifetable is required for insurance claims");
    table = load_life_table(c.cfg.lifetable);
    claim = ClaimSpec::insurance_claim(
        InsuranceSpec::constant(insurance_product_from_string(c.cfg.claim),
                                per_company(c.cfg.fund_units, n, 1.0, "fund_units"),
                                per_company(c.cfg.guarantee, n, 1.0, "guarantee"), c.cfg.age, T),
        table);
  }
  const Vec weights = per_company(c.cfg.weights, n, 1.0, "weights");
  const HedgeStrategy hs = hedge_schedule(ms, f, claim, t0, weights);
  CsvWriter w({"t", "company", "h", "h0", "V"});
  for (int s = t0; s <= T; ++s) {
    const int row = std::max(s - t0 - 1, 0);
    for (int i = 0; i < n; ++i)
      w.cell(s).cell(lp.companies[static_cast<std::size_t>(i)]).cell(hs.h(row, i))
          .cell(hs.h0(s - t0)).cell(hs.V(s - t0)).end_row();
  }
  write_text_file(out_path(c, "hedge.csv"), w.str());
  emit({{"command", "hedge"}, {"t0", t0}, {"maturity", T}, {"report", out_path(c, "hedge.csv")}});
  return 0;
}

int cmd_simulate(const Context& c) {
  const LoadedPanel lp = load(c);
  const ModelParameters params = require_params(c);
  const ModelSystems ms = ModelSystems::build(params, lp.data, c.cfg.convention);
  const bool rn = c.cfg.measure == "risk-neutral";
  const MeasureSystem& sys = rn ? ms.rn_sys : ms.real_sys;
  const int t0 = valuation_date(c, lp.data, 0);
  const int H = t0 + c.cfg.horizon;
  if (c.cfg.horizon < 1 || H > lp.data.T())
    throw Error("horizon must lie in 1.." + std::to_string(lp.data.T() - t0));
  StateBelief start;
  if (t0 == 0) {
    start.t = 0;
    start.mean = sys.initial_mean();
    start.cov = sys.initial_cov();
    start.measure = sys.measure;
  } else {
    start = filter(sys, ms.data, t0).filtered[static_cast<std::size_t>(t0)];
  }
  const Simulator sim(ms, sys, start, H);
  SimConfig cfg;
  cfg.measure = sys.measure;
  cfg.seed = c.cfg.seed;
  const std::uint64_t total = c.explicit_keys.count("paths") ? c.cfg.paths : 1000;
  cfg.n_paths = std::max<std::uint64_t>(1, total / 2);
  cfg.t_start = t0;
  cfg.horizon = H;
  cfg.antithetic = true;
  const PathSet ps = simulate(sim, cfg);
  const int n = lp.data.n(), ell = lp.data.ell();
  std::vector<std::string> header{"path", "t"};
  for (const auto& name : lp.companies) header.push_back("b_tilde:" + name);
  for (int j = 0; j < ell; ++j) header.push_back("z" + std::to_string(j + 1));
  for (const auto& name : lp.companies) header.push_back("m_tilde:" + name);
  for (const auto& name : lp.companies) header.push_back("log_price:" + name);
  header.push_back("log_discount");
  CsvWriter w(header);
  for (std::size_t k = 0; k < ps.paths.size(); ++k) {
    const SimPath& p = ps.paths[k];
    for (int s = t0; s <= H; ++s) {
      const int r = s - t0;
      w.cell(static_cast<int>(k)).cell(s);
      for (int i = 0; i < n; ++i) w.cell(p.b(r, i));
      for (int j = 0; j < ell; ++j) w.cell(p.z(r, j));
      for (int i = 0; i < n; ++i) w.cell(p.m(r, i));
      const Vec lpx = p.log_price(s);
      for (int i = 0; i < n; ++i) w.cell(lpx(i));
      w.cell(p.log_discount(r)).end_row();
    }
  }
  write_text_file(out_path(c, "paths.csv"), w.str());
  emit({{"command", "simulate"}, {"measure", c.cfg.measure}, {"paths", ps.paths.size()},
        {"report", out_path(c, "paths.csv")}});
  return 0;
}

int cmd_verify(const Context& c) {
  VerifyOptions o;
  o.seed = c.cfg.seed;
  o.paths = c.cfg.paths;
  o.em_datasets = c.cfg.em_datasets;
  o.recovery_seeds = c.cfg.recovery_seeds;
  o.progress = [](const std::string& m) { std::cerr << m << std::endl; };
  const VerifyReport rep = run_verification(o);
  const std::string text = rep.text();
  write_text_file(out_path(c, "verify_report.txt"), text);
  std::cout << text;
  return rep.all_pass() ? 0 : 1;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "parse_error";
  if (dynamic_cast<const DimensionError*>(&e)) return "dimension_error";
  if (dynamic_cast<const DomainError*>(&e)) return "domain_error";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical_error";
  if (dynamic_cast<const Error*>(&e)) return "error";
  return "internal_error";
}

}  // namespace

namespace pcv {

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Private-company valuation: estimation, pricing, hedging and verification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "Flat key = value configuration file");
  std::map<std::string, std::string> cli;
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"--panel", "panel"},         {"--macro", "macro"},         {"--exog", "exog"},
      {"--lifetable", "lifetable"}, {"--convention", "convention"}, {"--seed", "seed"},
      {"--paths", "paths"},         {"--tol", "tol"},             {"--max-iter", "max_iter"},
      {"--out", "out"},             {"--params", "params"},       {"--lag-order", "p"},
      {"--B0", "B0"},               {"--t", "t"},                 {"--maturity", "maturity"},
      {"--strikes", "strikes"},     {"--product", "product"},     {"--age", "age"},
      {"--fund-units", "fund_units"}, {"--guarantee", "guarantee"}, {"--weights", "weights"},
      {"--horizon", "horizon"},     {"--measure", "measure"},     {"--claim", "claim"},
      {"--em-datasets", "em_datasets"}, {"--recovery-seeds", "recovery_seeds"},
      {"--estimate-sigma0", "estimate_sigma0"}};
  std::map<std::string, std::string> raw;
  for (const auto& [flag, key] : flags) app.add_option(flag, raw[key], "config key " + key);
  std::vector<std::string> sets;
  app.add_option("--set", sets, "Any config key as key=value");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"estimate", "EM estimation of the model parameters"},
      {"smooth", "Filtered and smoothed log price-to-book ratios"},
      {"forecast", "Real-world forecasts beyond the observed sample"},
      {"value", "Smoothed equity values V = exp(m) B"},
      {"price-option", "European call and put prices"},
      {"price-insurance", "Equity-linked life insurance premiums"},
      {"hedge", "Locally risk-minimizing hedging strategy"},
      {"simulate", "Monte Carlo paths under the real or risk-neutral measure"},
      {"verify", "Run the acceptance checks and print a pass/fail table"}};
  for (const auto& [name, desc] : commands) app.add_subcommand(name, desc);

  std::string command = "pcv";
  try {
    app.parse(argc, argv);
    command = app.get_subcommands().front()->get_name();
    Context ctx;
    if (!config_file.empty()) {
      auto kv = parse_key_values(read_text_file(config_file), config_file);
      const fs::path base = fs::path(config_file).parent_path();
      for (const char* key : {"panel", "macro", "exog", "lifetable", "params", "out"}) {
        auto it = kv.find(key);
        if (it != kv.end() && !it->second.empty() && fs::path(it->second).is_relative())
          it->second = (base / it->second).string();
      }
      ctx.cfg.apply_all(kv, config_file);
      for (const auto& [k, v] : kv) ctx.explicit_keys.insert(k);
    }
    for (const auto& [flag, key] : flags)
      if (app.count(flag) > 0) {
        ctx.cfg.apply(key, raw[key], "command line");
        ctx.explicit_keys.insert(key);
      }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ParseError("command line", 0, "--set expects key=value");
      ctx.cfg.apply(s.substr(0, eq), s.substr(eq + 1), "command line");
      ctx.explicit_keys.insert(s.substr(0, eq));
    }
    if (command == "estimate") return cmd_estimate(ctx);
    if (command == "smooth") return cmd_smooth(ctx, false);
    if (command == "value") return cmd_smooth(ctx, true);
    if (command == "forecast") return cmd_forecast(ctx);
    if (command == "price-option") return cmd_price_option(ctx);
    if (command == "price-insurance") return cmd_price_insurance(ctx);
    if (command == "hedge") return cmd_hedge(ctx);
    if (command == "simulate") return cmd_simulate(ctx);
    return cmd_verify(ctx);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "usage_error"}, {"command", command}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << json{{"error", "parse_error"}, {"command", command}, {"message", e.what()},
                      {"source", e.source}, {"line", e.line}}.dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", error_kind(e)}, {"command", command}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
}

}  // namespace pcv
