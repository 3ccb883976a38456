#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "msod/numerics.hpp"
#include "msod/parallel.hpp"

namespace msod {

// Largest n for which the balanced assignments are enumerated explicitly.
inline constexpr int kEnumerationGuard = 28;

// Balanced +-1 treatment vector (sum exactly zero).
class Assignment {
 public:
  // Throws ValidationError on entries other than +-1, odd or zero length, or
  // imbalance.
  explicit Assignment(const std::vector<int>& w);
  explicit Assignment(std::vector<std::int8_t> w);

  int n() const { return static_cast<int>(w_.size()); }
  int operator[](int i) const { return w_[static_cast<std::size_t>(i)]; }
  const std::vector<std::int8_t>& values() const { return w_; }
  Eigen::VectorXd vector() const;
  std::vector<int> to_ints() const;

  Assignment negated() const;
  // Sign-pair representative: the member of {w, -w} with w_1 = +1.
  Assignment canonical() const;
  bool is_canonical() const { return w_.front() == 1; }
  int dot(const Assignment& other) const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<std::int8_t> w_;
};

// Lexicographic order with +1 ranked before -1. This is the order in which
// enumerate_balanced lists assignments and the tie-break used everywhere.
bool lex_less(const Assignment& a, const Assignment& b);

struct SignPair {
  Assignment representative;  // canonical (w_1 = +1)
  double probability;         // total mass of {w, -w}
};

// Blinded design: a distribution over sign-pairs. Each pair's mass is split
// evenly between w and -w, so sigma(w) = sigma(-w) holds by construction.
// Above the enumeration guard, complete randomization is held implicitly
// and sampled without enumeration.
class Design {
 public:
  // Strict constructor used by readers: representatives canonical, pairwise
  // distinct, probabilities in (0, 1] summing to 1 within 1e-12.
  static Design from_pairs(int n, std::vector<SignPair> pairs);
  static Design implicit_complete_randomization(int n);

  int n() const { return n_; }
  bool is_explicit() const { return explicit_; }
  // Throws ValidationError for implicit designs.
  const std::vector<SignPair>& pairs() const;
  double max_pair_probability() const;
  // Index of the pair containing w or -w.
  std::optional<std::size_t> find_pair(const Assignment& w) const;

  Assignment sample(Rng& rng) const;

 private:
  Design() = default;

  int n_ = 0;
  bool explicit_ = true;
  std::vector<SignPair> pairs_;
  std::vector<double> cumulative_;
};

// Neumaier-compensated sum; designs can carry tens of millions of masses.
double compensated_sum(const std::vector<double>& values);

// Visits every canonical balanced assignment (w_1 = +1) in lex order.
// The callback receives a reference valid only for the duration of the call.
template <class Fn>
void for_each_representative(int n, Fn&& fn);

std::vector<Assignment> enumerate_balanced(int n);
std::vector<Assignment> enumerate_representatives(int n);
std::uint64_t binomial(int n, int k);

Design design_cr(int n);
Design design_single(const Assignment& w0);
// Canonicalizes, merges sign duplicates, drops zero masses and renormalizes.
Design design_from_support(const std::vector<std::pair<Assignment, double>>& support);

// Q(sigma) = sum over pairs of p w w^T; closed form (n/(n-1))(I - E/n) for
// implicit complete randomization. Diagonal set to exactly 1.
SymMatrix q_matrix(const Design& design);

Assignment sample_assignment(const Design& design, std::uint64_t seed);

// ---------------------------------------------------------------------------

void check_enumerable(int n);

template <class Fn>
void for_each_representative(int n, Fn&& fn) {
  check_enumerable(n);
  const int half = n / 2;
  // Treated set = {0} plus (half - 1) indices from 1..n-1, in lex order.
  std::vector<int> chosen(static_cast<std::size_t>(half));
  for (int i = 0; i < half; ++i) chosen[static_cast<std::size_t>(i)] = i;
  std::vector<std::int8_t> w(static_cast<std::size_t>(n));
  for (;;) {
    std::fill(w.begin(), w.end(), std::int8_t{-1});
    for (int idx : chosen) w[static_cast<std::size_t>(idx)] = 1;
    fn(static_cast<const std::vector<std::int8_t>&>(w));
    int pos = half - 1;
    while (pos >= 1 && chosen[static_cast<std::size_t>(pos)] == n - half + pos) --pos;
    if (pos < 1) return;
    ++chosen[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < half; ++j) {
      chosen[static_cast<std::size_t>(j)] = chosen[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
}

}  // namespace msod
