#include "msod/designs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "msod/errors.hpp"

namespace msod {

namespace {

std::vector<std::int8_t> checked_signs(const std::vector<int>& w) {
  std::vector<std::int8_t> out;
  out.reserve(w.size());
  for (int v : w) {
    if (v != 1 && v != -1) throw ValidationError("assignment entries must be +1 or -1");
    out.push_back(static_cast<std::int8_t>(v));
  }
  return out;
}

}  // namespace

Assignment::Assignment(const std::vector<int>& w) : Assignment(checked_signs(w)) {}

Assignment::Assignment(std::vector<std::int8_t> w) : w_(std::move(w)) {
  if (w_.empty() || w_.size() % 2 != 0) {
    throw ValidationError("assignment length must be even and positive");
  }
  int sum = 0;
  for (std::int8_t v : w_) {
    if (v != 1 && v != -1) throw ValidationError("assignment entries must be +1 or -1");
    sum += v;
  }
  if (sum != 0) throw ValidationError("assignment is not balanced (sum " + std::to_string(sum) + ")");
}

Eigen::VectorXd Assignment::vector() const {
  Eigen::VectorXd v(n());
  for (int i = 0; i < n(); ++i) v[i] = w_[static_cast<std::size_t>(i)];
  return v;
}

std::vector<int> Assignment::to_ints() const { return {w_.begin(), w_.end()}; }

Assignment Assignment::negated() const {
  std::vector<std::int8_t> flipped(w_);
  for (auto& v : flipped) v = static_cast<std::int8_t>(-v);
  return Assignment(std::move(flipped));
}

Assignment Assignment::canonical() const { return is_canonical() ? *this : negated(); }

int Assignment::dot(const Assignment& other) const {
  if (other.n() != n()) throw ValidationError("assignment lengths differ");
  int total = 0;
  for (std::size_t i = 0; i < w_.size(); ++i) total += w_[i] * other.w_[i];
  return total;
}

bool lex_less(const Assignment& a, const Assignment& b) {
  return std::lexicographical_compare(a.values().begin(), a.values().end(), b.values().begin(),
                                      b.values().end(), std::greater<>());
}

double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

Design Design::from_pairs(int n, std::vector<SignPair> pairs) {
  if (n < 2 || n % 2 != 0) throw ValidationError("design size n must be even and positive");
  if (pairs.empty()) throw ValidationError("design has no pairs");
  std::vector<double> masses;
  masses.reserve(pairs.size());
  for (const SignPair& pair : pairs) {
    if (pair.representative.n() != n) throw ValidationError("pair length does not match n");
    if (!pair.representative.is_canonical()) {
      throw ValidationError("pair representatives must have w_1 = +1");
    }
    if (!(pair.probability > 0.0 && pair.probability <= 1.0)) {
      throw ValidationError("pair probabilities must lie in (0, 1]");
    }
    masses.push_back(pair.probability);
  }
  const double total = compensated_sum(masses);
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "pair probabilities sum to " << total << ", not 1";
    throw ValidationError(msg.str());
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(pairs[a].representative, pairs[b].representative);
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (pairs[order[i]].representative == pairs[order[i - 1]].representative) {
      throw ValidationError("design has duplicate sign-pair representatives");
    }
  }

  Design design;
  design.n_ = n;
  design.pairs_ = std::move(pairs);
  design.cumulative_.reserve(design.pairs_.size());
  double running = 0.0;
  for (const SignPair& pair : design.pairs_) {
    running += pair.probability;
    design.cumulative_.push_back(running);
  }
  return design;
}

Design Design::implicit_complete_randomization(int n) {
  if (n < 2 || n % 2 != 0) throw ValidationError("design size n must be even and positive");
  Design design;
  design.n_ = n;
  design.explicit_ = false;
  return design;
}

const std::vector<SignPair>& Design::pairs() const {
  if (!explicit_) {
    throw ValidationError("complete randomization with n = " + std::to_string(n_) +
                          " is held implicitly; its pairs are not enumerated");
  }
  return pairs_;
}

double Design::max_pair_probability() const {
  if (!explicit_) {
    // 2 / C(n, n/2), computed in log space to stay finite for large n.
    const double log_count = std::lgamma(n_ + 1.0) - 2.0 * std::lgamma(n_ / 2 + 1.0);
    return 2.0 * std::exp(-log_count);
  }
  double best = 0.0;
  for (const SignPair& pair : pairs_) best = std::max(best, pair.probability);
  return best;
}

std::optional<std::size_t> Design::find_pair(const Assignment& w) const {
  if (w.n() != n_) return std::nullopt;
  const Assignment rep = w.canonical();
  for (std::size_t i = 0; i < pairs().size(); ++i) {
    if (pairs_[i].representative == rep) return i;
  }
  return std::nullopt;
}

Assignment Design::sample(Rng& rng) const {
  std::bernoulli_distribution flip(0.5);
  if (!explicit_) {
    std::vector<std::int8_t> w(static_cast<std::size_t>(n_), -1);
    std::fill(w.begin(), w.begin() + n_ / 2, std::int8_t{1});
    std::shuffle(w.begin(), w.end(), rng);
    return Assignment(std::move(w));
  }
  std::uniform_real_distribution<double> unit(0.0, cumulative_.back());
  const double u = unit(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  std::size_t index = static_cast<std::size_t>(it - cumulative_.begin());
  if (index >= pairs_.size()) index = pairs_.size() - 1;
  const Assignment& rep = pairs_[index].representative;
  return flip(rng) ? rep.negated() : rep;
}

void check_enumerable(int n) {
  if (n < 2 || n % 2 != 0) {
    throw ValidationError("n must be even and positive, got " + std::to_string(n));
  }
  if (n > kEnumerationGuard) {
    throw ValidationError("n = " + std::to_string(n) + " exceeds the enumeration guard (" +
                          std::to_string(kEnumerationGuard) + ")");
  }
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return result;
}

std::vector<Assignment> enumerate_balanced(int n) {
  check_enumerable(n);
  const int half = n / 2;
  std::vector<Assignment> out;
  out.reserve(binomial(n, half));
  std::vector<int> chosen(static_cast<std::size_t>(half));
  std::iota(chosen.begin(), chosen.end(), 0);
  for (;;) {
    std::vector<std::int8_t> w(static_cast<std::size_t>(n), -1);
    for (int idx : chosen) w[static_cast<std::size_t>(idx)] = 1;
    out.emplace_back(std::move(w));
    int pos = half - 1;
    while (pos >= 0 && chosen[static_cast<std::size_t>(pos)] == n - half + pos) --pos;
    if (pos < 0) break;
    ++chosen[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < half; ++j) {
      chosen[static_cast<std::size_t>(j)] = chosen[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

std::vector<Assignment> enumerate_representatives(int n) {
  std::vector<Assignment> out;
  out.reserve(binomial(n, n / 2) / 2);
  for_each_representative(n, [&](const std::vector<std::int8_t>& w) { out.emplace_back(w); });
  return out;
}

Design design_cr(int n) {
  if (n < 2 || n % 2 != 0) throw ValidationError("n must be even and positive");
  if (n > kEnumerationGuard) return Design::implicit_complete_randomization(n);
  const double mass = 2.0 / static_cast<double>(binomial(n, n / 2));
  std::vector<SignPair> pairs;
  pairs.reserve(binomial(n, n / 2) / 2);
  for_each_representative(n, [&](const std::vector<std::int8_t>& w) {
    pairs.push_back({Assignment(w), mass});
  });
  return Design::from_pairs(n, std::move(pairs));
}

Design design_single(const Assignment& w0) {
  return Design::from_pairs(w0.n(), {{w0.canonical(), 1.0}});
}

Design design_from_support(const std::vector<std::pair<Assignment, double>>& support) {
  if (support.empty()) throw ValidationError("design support is empty");
  const int n = support.front().first.n();
  auto lex = [](const Assignment& a, const Assignment& b) { return lex_less(a, b); };
  std::map<Assignment, double, decltype(lex)> merged(lex);
  for (const auto& [w, p] : support) {
    if (w.n() != n) throw ValidationError("support assignments have different lengths");
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ValidationError("support probabilities must be nonnegative and finite");
    }
    if (p == 0.0) continue;
    merged[w.canonical()] += p;
  }
  std::vector<double> masses;
  for (const auto& entry : merged) masses.push_back(entry.second);
  const double total = compensated_sum(masses);
  if (!(total > 0.0)) throw ValidationError("support carries no probability mass");
  std::vector<SignPair> pairs;
  pairs.reserve(merged.size());
  for (const auto& [rep, p] : merged) pairs.push_back({rep, std::min(1.0, p / total)});
  return Design::from_pairs(n, std::move(pairs));
}

SymMatrix q_matrix(const Design& design) {
  const int n = design.n();
  Eigen::MatrixXd q;
  if (!design.is_explicit()) {
    const double scale = static_cast<double>(n) / (n - 1);
    q = Eigen::MatrixXd::Constant(n, n, -scale / n);
    q.diagonal().setOnes();
    return SymMatrix(q);
  }
  q = Eigen::MatrixXd::Zero(n, n);
  const auto& pairs = design.pairs();
  constexpr std::size_t kChunk = 2048;
  for (std::size_t start = 0; start < pairs.size(); start += kChunk) {
    const std::size_t stop = std::min(pairs.size(), start + kChunk);
    Eigen::MatrixXd u(n, static_cast<Eigen::Index>(stop - start));
    Eigen::VectorXd p(static_cast<Eigen::Index>(stop - start));
    for (std::size_t k = start; k < stop; ++k) {
      const auto col = static_cast<Eigen::Index>(k - start);
      u.col(col) = pairs[k].representative.vector();
      p[col] = pairs[k].probability;
    }
    q.noalias() += u * p.asDiagonal() * u.transpose();
  }
  q.diagonal().setOnes();
  return SymMatrix(q);
}

Assignment sample_assignment(const Design& design, std::uint64_t seed) {
  Rng rng(seed);
  return design.sample(rng);
}

}  // namespace msod
