#include "msod/risk.hpp"

#include <cmath>
#include <vector>

#include "msod/errors.hpp"

namespace msod {

double b_value(const Design& design, const Eigen::VectorXd& mu0) {
  if (mu0.size() != design.n()) {
    throw ValidationError("mean vector has length " + std::to_string(mu0.size()) +
                          " but the design has n = " + std::to_string(design.n()));
  }
  const Eigen::VectorXd mu = mu0.array() - mu0.mean();
  if (!design.is_explicit()) {
    const int n = design.n();
    return static_cast<double>(n) / (n - 1) * mu.squaredNorm();
  }
  std::vector<double> terms;
  terms.reserve(design.pairs().size());
  for (const SignPair& pair : design.pairs()) {
    double inner = 0.0;
    const auto& w = pair.representative.values();
    for (std::size_t i = 0; i < w.size(); ++i) inner += w[i] * mu[static_cast<Eigen::Index>(i)];
    terms.push_back(pair.probability * inner * inner);
  }
  return compensated_sum(terms);
}

RiskReport minimax_risk(const Design& design, const GramMatrix& gram, double c) {
  if (gram.n() != design.n()) {
    throw ValidationError("Gram matrix dimension " + std::to_string(gram.n()) +
                          " does not match design n = " + std::to_string(design.n()));
  }
  if (!(c > 0) || !std::isfinite(c)) throw ValidationError("budget C must be positive");
  const SymMatrix root = psd_sqrt(gram.matrix());
  const SymMatrix q = q_matrix(design);
  const SymMatrix sandwich(root.dense() * q.dense() * root.dense());
  const EigenPair top = top_eigenpair(sandwich, 1e-9);

  RiskReport report;
  report.budget = c;
  report.minimax_risk = c * std::max(0.0, top.value);
  report.witness_mu = std::sqrt(c) * (root.dense() * top.vector);
  report.max_pair_probability = design.max_pair_probability();
  return report;
}

MseDecomposition predict_mse(const Design& design, const Eigen::VectorXd& mu,
                             double noise_var_sum, double sate_var) {
  if (!(noise_var_sum >= 0) || !(sate_var >= 0)) {
    throw ValidationError("variances must be nonnegative");
  }
  const double n2 = static_cast<double>(design.n()) * design.n();
  MseDecomposition out;
  out.design_term = b_value(design, mu) / n2;
  out.noise_term = noise_var_sum / n2;
  out.sate_term = sate_var;
  out.total = out.design_term + out.noise_term + out.sate_term;
  return out;
}

}  // namespace msod
