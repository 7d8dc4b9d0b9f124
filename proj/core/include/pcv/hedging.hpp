#pragma once

#include "pcv/kalman.hpp"
#include "pcv/pricing.hpp"

#include <vector>

namespace pcv {

// Arguments of E[(alpha1 . e^{X1})(alpha2 . (e^{X2} - L)^+)'] for jointly
// Gaussian (X1, X2).
struct PsiArgs {
  Vec L;
  Vec alpha1;
  Vec alpha2;
  Vec mu1;
  Vec mu2;
  Mat Sigma11;
  Mat Sigma12;
  Mat Sigma22;
};

Mat psi_plus(const PsiArgs& a);
Mat psi_minus(const PsiArgs& a);

// E[(dP + d)(dP + d)' | F_t] for discounted prices, from a risk-neutral time-t belief.
Mat omega_bar(const PanelData& data, const Mat& Sigma_uu, const StateBelief& belief);

enum class ClaimKind { Call, Put, SegTerm, SegEndow, ULTerm, ULEndow };

std::string to_string(ClaimKind k);
ClaimKind claim_kind_from_string(const std::string& s);

struct ClaimSpec {
  ClaimKind kind = ClaimKind::Call;
  Vec K;                  // options
  InsuranceSpec insurance;  // insurance kinds
  const LifeTable* table = nullptr;
  int maturity = 1;

  bool is_option() const { return kind == ClaimKind::Call || kind == ClaimKind::Put; }
  static ClaimSpec option(ClaimKind kind, const Vec& K, int maturity);
  static ClaimSpec insurance_claim(const InsuranceSpec& spec, const LifeTable& table);
};

// Cov[dP_{t+1} + d_{t+1}, H | F_t] for discounted prices and claims; column j
// is the claim written on company j.
Mat lambda_bar(const MeasureSystem& rn_sys, const PanelData& data, const ClaimSpec& claim,
               const StateBelief& belief);

// Time-t value of the claim (per company), for an insured alive at t.
Vec claim_value(const MeasureSystem& rn_sys, const PanelData& data, const ClaimSpec& claim,
                const StateBelief& belief);

// E[P_{t+1} + d_{t+1} | F_{t+1}] from the time-(t+1) belief.
Vec expected_price_plus_dividend(const PanelData& data, DividendConvention conv,
                                 const StateBelief& belief_next);

struct HedgeStep {
  int t = 0;
  Mat omega;
  Mat lambda;
  Vec h;  // holdings over [t, t+1]
  bool pseudo_inverse = false;
};

// h_{t+1} = Omega^{-1} Lambda w, where w weights the per-company claims.
HedgeStep strategy(const MeasureSystem& rn_sys, const PanelData& data, const ClaimSpec& claim,
                   const StateBelief& belief, const Vec& weights);

struct HedgeStrategy {
  int t0 = 0;
  Mat h;    // row s - t0 - 1 holds h_s, s = t0+1..maturity
  Vec h0;   // entry s - t0 for s = t0..maturity
  Vec V;    // aggregated claim value, entry s - t0
};

// Runs the strategy along the observed sample from t0 to the claim maturity,
// using risk-neutral filtered beliefs at each date.
HedgeStrategy hedge_schedule(const ModelSystems& ms, const FilterOutput& rn_filter,
                             const ClaimSpec& claim, int t0, const Vec& weights);

}  // namespace pcv
