#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pcv {

struct VerifyOptions {
  std::uint64_t seed = 20240601;
  std::uint64_t paths = 1000000;  // Monte Carlo paths per check (antithetic pairs count twice)
  int instances = 100;            // random filter/smoother instances
  int em_datasets = 20;           // monotonicity and stationarity
  int recovery_seeds = 50;        // parameter recovery
  double em_tol = 1e-13;          // tolerance for the stationarity runs
  std::function<void(const std::string&)> progress;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::vector<std::string> details;  // deterministic text
  double seconds = 0.0;              // wall time, kept out of the report text
};

struct VerifyReport {
  std::vector<CriterionResult> criteria;
  bool all_pass() const;
  // One PASS/FAIL line per criterion followed by indented details.
  std::string text() const;
};

CriterionResult verify_filter(const VerifyOptions& o);             // 1
CriterionResult verify_smoother(const VerifyOptions& o);           // 2
CriterionResult verify_em(const VerifyOptions& o);                 // 3
CriterionResult verify_martingale(const VerifyOptions& o);         // 4
CriterionResult verify_bond(const VerifyOptions& o);               // 5
CriterionResult verify_options(const VerifyOptions& o);            // 6
CriterionResult verify_lognormal_call(const VerifyOptions& o);     // 7
CriterionResult verify_psi(const VerifyOptions& o);                // 8
CriterionResult verify_insurance(const VerifyOptions& o);          // 9
CriterionResult verify_hedging(const VerifyOptions& o);            // 10

// Runs the selected criteria (all of 1..10 when empty) in order.
VerifyReport run_verification(const VerifyOptions& o, const std::vector<int>& only = {});

// Oracle for E[(e^X - K)^+], X ~ N(mu, sigma^2), by adaptive Gauss-Kronrod quadrature.
double call_by_quadrature(double mu, double sigma, double K);

}  // namespace pcv
