#include "pcv/hedging.hpp"

#include <cmath>

namespace pcv {

namespace {

enum class Side { Plus, Minus };

Mat psi(const PsiArgs& a, Side side) {
  const Eigen::Index n1 = a.mu1.size(), n2 = a.mu2.size();
  if (a.alpha1.size() != n1 || a.Sigma11.rows() != n1 || a.Sigma11.cols() != n1 ||
      a.alpha2.size() != n2 || a.L.size() != n2 || a.Sigma22.rows() != n2 ||
      a.Sigma22.cols() != n2 || a.Sigma12.rows() != n1 || a.Sigma12.cols() != n2)
    throw DimensionError("psi: inconsistent argument sizes");
  Mat out(n1, n2);
  for (Eigen::Index j = 0; j < n2; ++j) {
    const double v22 = a.Sigma22(j, j);
    if (!(v22 > 0.0)) throw DegenerateVariance("psi: Sigma22 diagonal must be positive");
    if (a.L(j) < 0.0) throw DomainError("psi: L must be nonnegative");
    const double sd = std::sqrt(v22);
    const double e2 = std::exp(a.mu2(j) + 0.5 * v22);
    for (Eigen::Index i = 0; i < n1; ++i) {
      const double e1 = a.alpha1(i) * std::exp(a.mu1(i) + 0.5 * a.Sigma11(i, i));
      const double s12 = a.Sigma12(i, j);
      const double shifted = e2 * std::exp(s12);
      double value;
      if (a.L(j) == 0.0) {
        value = side == Side::Plus ? shifted : 0.0;
      } else {
        const double d1 = (a.mu2(j) + v22 + s12 - std::log(a.L(j))) / sd;
        const double d2 = d1 - sd;
        value = side == Side::Plus ? shifted * norm_cdf(d1) - a.L(j) * norm_cdf(d2)
                                   : a.L(j) * norm_cdf(-d2) - shifted * norm_cdf(-d1);
      }
      out(i, j) = e1 * a.alpha2(j) * value;
    }
  }
  return out;
}

}  // namespace

Mat psi_plus(const PsiArgs& a) { return psi(a, Side::Plus); }
Mat psi_minus(const PsiArgs& a) { return psi(a, Side::Minus); }

Mat omega_bar(const PanelData& data, const Mat& Sigma_uu, const StateBelief& belief) {
  const int t = belief.t;
  const Mat S = belief.m_cov();
  const Vec v = (belief.m() + data.log_book(t) + 0.5 * S.diagonal()).array().exp();
  const double D = std::exp(data.log_discount(t));
  const Mat excess = Sigma_uu.array().exp() - 1.0;
  return D * D * excess.cwiseProduct(v * v.transpose()).cwiseProduct(Mat(S.array().exp()));
}

std::string to_string(ClaimKind k) {
  switch (k) {
    case ClaimKind::Call:
      return "call";
    case ClaimKind::Put:
      return "put";
    case ClaimKind::SegTerm:
      return "seg-term";
    case ClaimKind::SegEndow:
      return "seg-endow";
    case ClaimKind::ULTerm:
      return "ul-term";
    case ClaimKind::ULEndow:
      return "ul-endow";
  }
  return "?";
}

ClaimKind claim_kind_from_string(const std::string& s) {
  for (auto k : {ClaimKind::Call, ClaimKind::Put, ClaimKind::SegTerm, ClaimKind::SegEndow,
                 ClaimKind::ULTerm, ClaimKind::ULEndow})
    if (to_string(k) == s) return k;
  throw Error("unknown claim kind '" + s + "'");
}

ClaimSpec ClaimSpec::option(ClaimKind kind, const Vec& K, int maturity) {
  if (kind != ClaimKind::Call && kind != ClaimKind::Put)
    throw Error("ClaimSpec::option: kind must be call or put");
  ClaimSpec c;
  c.kind = kind;
  c.K = K;
  c.maturity = maturity;
  return c;
}

ClaimSpec ClaimSpec::insurance_claim(const InsuranceSpec& spec, const LifeTable& table) {
  ClaimSpec c;
  switch (spec.product) {
    case InsuranceProduct::SegregatedTerm:
      c.kind = ClaimKind::SegTerm;
      break;
    case InsuranceProduct::SegregatedEndowment:
      c.kind = ClaimKind::SegEndow;
      break;
    case InsuranceProduct::UnitLinkedTerm:
      c.kind = ClaimKind::ULTerm;
      break;
    case InsuranceProduct::UnitLinkedEndowment:
      c.kind = ClaimKind::ULEndow;
      break;
  }
  c.insurance = spec;
  c.table = &table;
  c.maturity = spec.maturity;
  return c;
}

namespace {

// One payment date of a claim: payoff alpha2 . (P_k - L)^+ (Plus) or
// alpha2 . (L - P_k)^+ (Minus), plus an optional fixed amount G, scaled by weight.
struct Payment {
  int k;
  double weight;
  Vec alpha2;
  Vec L;
  Side side;
  Vec fixed;
};

std::vector<Payment> payments_of(const ClaimSpec& claim, int t, int n) {
  std::vector<Payment> out;
  if (claim.is_option()) {
    out.push_back({claim.maturity, 1.0, Vec::Ones(n), claim.K,
                   claim.kind == ClaimKind::Call ? Side::Plus : Side::Minus, Vec::Zero(n)});
    return out;
  }
  if (!claim.table) throw Error("insurance claim needs a life table");
  const InsuranceSpec& spec = claim.insurance;
  const bool ul = claim.kind == ClaimKind::ULTerm || claim.kind == ClaimKind::ULEndow;
  auto make = [&](int k, double w) {
    const Vec& F = spec.F(k);
    const Vec& G = spec.G(k);
    Payment p{k, w, F, Vec::Ones(n), ul ? Side::Plus : Side::Minus, Vec::Zero(n)};
    for (int i = 0; i < n; ++i) {
      if (F(i) != 0.0) {
        p.L(i) = G(i) / F(i);
      } else if (!ul) {
        p.fixed(i) = G(i);  // F (G/F - P)^+ tends to G as F -> 0
      }
    }
    if (ul) p.fixed = G;
    return p;
  };
  if (claim.kind == ClaimKind::SegTerm || claim.kind == ClaimKind::ULTerm) {
    for (int k = t; k < claim.maturity; ++k) {
      const double w = claim.table->deferred_death(spec.age, t, k);
      if (w != 0.0) out.push_back(make(k + 1, w));
    }
  } else {
    out.push_back(make(claim.maturity, claim.table->survival(spec.age + t, claim.maturity - t)));
  }
  return out;
}

}  // namespace

Mat lambda_bar(const MeasureSystem& rn_sys, const PanelData& data, const ClaimSpec& claim,
               const StateBelief& belief) {
  const int t = belief.t, n = rn_sys.dims.n;
  if (claim.maturity <= t) throw Error("lambda_bar: claim must mature after t");
  const PathLaw law(rn_sys, data, belief, claim.maturity);
  const Mat Suu = rn_sys.Sigma_xi.topLeftCorner(n, n);
  const Vec Bt = law.log_book_t().array().exp();
  const double D = std::exp(law.log_discount_t());

  const Mat Wm = law.m_loading();
  const Mat Wpi = Wm + law.u_next_loading();
  const Mat Sm = Wm * Wm.transpose();
  const Mat Spi = Wpi * Wpi.transpose();

  Mat out = Mat::Zero(n, n);
  for (const Payment& p : payments_of(claim, t, n)) {
    const int k = p.k;
    const Mat& WP = law.log_price_loading(k);
    const Vec m_fwd = law.forward_mean(law.m_mean(), Wm, k);
    const Vec u_fwd = law.forward_mean(Vec::Zero(n), law.u_next_loading(), k);
    const Vec P_fwd = law.forward_mean(law.log_price_mean(k), WP, k);
    const Mat SP = WP * WP.transpose();

    PsiArgs with_u{p.L, Bt, p.alpha2, m_fwd - 0.5 * Suu.diagonal() + u_fwd, P_fwd, Spi,
                   Wpi * WP.transpose(), SP};
    PsiArgs without_u{p.L, Bt, p.alpha2, m_fwd, P_fwd, Sm, Wm * WP.transpose(), SP};
    Mat term = p.side == Side::Plus ? Mat(psi_plus(with_u) - psi_plus(without_u))
                                    : Mat(psi_minus(with_u) - psi_minus(without_u));
    if (p.fixed.cwiseAbs().maxCoeff() > 0.0) {
      const Vec level = Bt.cwiseProduct((m_fwd + 0.5 * Sm.diagonal()).array().exp().matrix());
      const Vec jump = u_fwd.array().exp() - 1.0;
      term += level.cwiseProduct(jump) * p.fixed.transpose();
    }
    out += (D * D * law.bond(k) * p.weight) * term;
  }
  return out;
}

namespace {

double expiry_payoff_value(bool plus, double alpha2, double L, double mu, double var) {
  if (var < 1e-14) {
    const double P = std::exp(mu);
    return alpha2 * (plus ? std::max(P - L, 0.0) : std::max(L - P, 0.0));
  }
  const CallPut cp = lognormal_call_put(mu, var, L);
  return alpha2 * (plus ? cp.call : cp.put);
}

}  // namespace

Vec claim_value(const MeasureSystem& rn_sys, const PanelData& data, const ClaimSpec& claim,
                const StateBelief& belief) {
  const int t = belief.t, n = rn_sys.dims.n;
  if (t > claim.maturity) throw Error("claim_value: time beyond claim maturity");
  if (t < claim.maturity) {
    const PathLaw law(rn_sys, data, belief, claim.maturity);
    if (claim.is_option())
      return option_price(claim.kind == ClaimKind::Call ? OptionKind::Call : OptionKind::Put,
                          claim.K, claim.maturity, law);
    return insurance_premium(claim.insurance, *claim.table, law);
  }
  // At maturity: only the payment due now remains.
  if (claim.kind == ClaimKind::SegTerm || claim.kind == ClaimKind::ULTerm) return Vec::Zero(n);
  const Vec mu = belief.m() + data.log_book(t);
  const Mat S = belief.m_cov();
  Vec out(n);
  for (const Payment& p : payments_of(claim, t, n))
    for (int i = 0; i < n; ++i)
      out(i) = p.weight * (expiry_payoff_value(p.side == Side::Plus, p.alpha2(i), p.L(i), mu(i),
                                               S(i, i)) +
                           p.fixed(i));
  return out;
}

Vec expected_price_plus_dividend(const PanelData& data, DividendConvention conv,
                                 const StateBelief& b) {
  const int s = b.t, n = data.n();
  const Mat S = b.cov;
  const Vec lag_mean = b.mean.tail(n);
  Vec out = (b.m() + data.log_book(s) + 0.5 * S.diagonal().head(n)).array().exp();
  if (s < 1) return out;
  const Vec lb_prev = data.log_book(s - 1);
  for (int i = 0; i < n; ++i) {
    if (!data.pays(s, i)) continue;
    double ld = data.Delta(s)(i) + lb_prev(i);
    if (conv == DividendConvention::MarketPrice) ld += lag_mean(i) + 0.5 * S(n + i, n + i);
    out(i) += std::exp(ld);
  }
  return out;
}

HedgeStep strategy(const MeasureSystem& rn_sys, const PanelData& data, const ClaimSpec& claim,
                   const StateBelief& belief, const Vec& weights) {
  const int n = rn_sys.dims.n;
  HedgeStep step;
  step.t = belief.t;
  step.omega = omega_bar(data, rn_sys.Sigma_xi.topLeftCorner(n, n), belief);
  step.lambda = lambda_bar(rn_sys, data, claim, belief);
  const Mat inv = pinv_sym(step.omega, 1e-12, &step.pseudo_inverse);
  if (step.pseudo_inverse)
    warn("strategy: Omega singular at t=" + std::to_string(belief.t) + "; using pseudo-inverse");
  step.h = inv * (step.lambda * weights);
  return step;
}

HedgeStrategy hedge_schedule(const ModelSystems& ms, const FilterOutput& rn_filter,
                             const ClaimSpec& claim, int t0, const Vec& weights) {
  const int Tc = claim.maturity, n = ms.data.n();
  if (t0 < 0 || t0 >= Tc) throw Error("hedge_schedule: need 0 <= t0 < maturity");
  if (rn_filter.T < Tc) throw Error("hedge_schedule: filter must cover the claim maturity");
  const auto belief = [&](int s) { return rn_filter.filtered[static_cast<std::size_t>(s)]; };
  HedgeStrategy hs;
  hs.t0 = t0;
  hs.h = Mat::Zero(Tc - t0, n);
  hs.h0 = Vec::Zero(Tc - t0 + 1);
  hs.V = Vec::Zero(Tc - t0 + 1);
  hs.V(0) = claim_value(ms.rn_sys, ms.data, claim, belief(t0)).dot(weights);
  for (int s = t0; s < Tc; ++s) {
    const HedgeStep step = strategy(ms.rn_sys, ms.data, claim, belief(s), weights);
    hs.h.row(s - t0) = step.h.transpose();
    const StateBelief next = belief(s + 1);
    hs.V(s - t0 + 1) = claim_value(ms.rn_sys, ms.data, claim, next).dot(weights);
    hs.h0(s - t0 + 1) =
        hs.V(s - t0 + 1) - step.h.dot(expected_price_plus_dividend(ms.data, ms.conv, next));
  }
  hs.h0(0) = hs.V(0) - hs.h.row(0).dot(expected_price_plus_dividend(ms.data, ms.conv, belief(t0)));
  return hs;
}

}  // namespace pcv
