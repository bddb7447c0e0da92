#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arboreal/rng.hpp"

namespace arboreal {

/// Shape of the law beyond the explicit head.
///   none:      the head is the whole (finite) support
///   unknown:   the head truncates a law whose tail is not given
///   power:     p_j = c·(j+1)^{-s}
///   geometric: p_j = c·q^j
enum class TailKind { none, unknown, power, geometric };

/// Probability law on ℤ₊ given by an explicit head p_0..p_J plus an optional analytic tail.
class StepLaw {
 public:
  /// p_j = (j+1)^{-s} / ζ(s), s > 1.
  static StepLaw power(double s, int truncation = 64);
  /// p_j = (1-q) q^j; q = 1/2 gives p_j = 2^{-(j+1)}.
  static StepLaw geometric(double q, int truncation = 64);
  static StepLaw table(std::vector<double> p, TailKind tail = TailKind::none);
  /// p_0 = lazy, and p_j ∝ shape(j) for j >= 1 with the given analytic family.
  static StepLaw lazy(double p0, TailKind family, double param, int truncation = 64);

  TailKind tail() const { return tail_; }
  double tail_param() const { return param_; }
  int truncation() const { return static_cast<int>(head_.size()) - 1; }
  bool infinite_support() const { return tail_ == TailKind::power || tail_ == TailKind::geometric; }
  std::string describe() const;

  double p(long j) const;
  /// P(X >= j) = 1 - F_{j-1}, summed from the tail for accuracy.
  double tail_mass(long j) const;
  double cdf(long j) const { return 1.0 - tail_mass(j + 1); }
  /// Throws std::domain_error when P(X >= j) = 0.
  double rho(long j) const;

  long sample(Rng& rng) const;

 private:
  StepLaw(std::vector<double> head, TailKind tail, double param, double scale);
  double shape_tail_sum(long j) const;  // Σ_{k >= j} shape(k) for the analytic tail

  std::vector<double> head_;
  std::vector<double> suffix_;  // suffix_[j] = P(X >= j) for j <= J+1
  TailKind tail_;
  double param_;
  double scale_;
};

enum class Verdict { holds, fails, undecided };
std::string to_string(Verdict v);

struct SimplicityResult {
  Verdict verdict = Verdict::undecided;
  double partial_sum = 0;  // Σ ρ_j² over the evaluated range
  long evaluated_to = 0;
  std::string reason;
};

/// Eventual simplicity of weak records: needs infinite support and Σ ρ_j² < ∞.
SimplicityResult simplicity_criterion(const StepLaw& law);

/// Record-value chain: ρ_i at i = j, (1-ρ_i)…(1-ρ_{j-1})ρ_j for i < j, 0 for i > j.
double vervaat_transition(const StepLaw& law, long i, long j);
/// Probability that the chain jumps from i to a state above j.
double vervaat_row_remainder(const StepLaw& law, long i, long j);

struct RecordTrace {
  std::vector<long> times;   // 1-based T_k
  std::vector<long> values;  // R_k
  std::vector<long> multiplicity;   // K_n = #{i <= n : X_i = max(X_1..X_n)}
  std::map<long, long> occupation;  // Z_j over values that occur
  std::vector<bool> simple;         // per record epoch: Z_{R_k} == 1
  std::vector<long> distinct_values;  // record values in increasing order

  std::size_t epochs() const { return times.size(); }
  long occupation_of(long j) const {
    auto it = occupation.find(j);
    return it == occupation.end() ? 0 : it->second;
  }
};

RecordTrace analyze_records(const std::vector<long>& xs);

struct OccupationRow {
  long j = 0;
  double rho = 0;
  double rho_sq = 0;
  double empirical = 0;  // P(Z_j >= 2)
  double stderr_ = 0;    // under the model value
  std::vector<double> zdist_empirical;  // P(Z_j = m), m = 0..4
  std::vector<double> zdist_model;
  bool excluded = false;
};

struct IndependenceRow {
  long i = 0, j = 0;
  double covariance = 0;  // of [Z_i >= 1], [Z_j >= 1]
  double stderr_ = 0;
};

struct OccupationReport {
  std::vector<OccupationRow> rows;
  std::vector<IndependenceRow> pairs;
  long runs = 0;
  long censored = 0;  // runs whose maximum never exceeded max_j within the horizon
};

/// Runs stop once the running maximum passes max_j, which leaves Z_0..Z_{max_j} final.
OccupationReport occupation_law_check(const StepLaw& law, long runs, long horizon, long max_j, std::uint64_t seed);

struct TransitionCell {
  long i = 0, j = 0;
  long observed = 0;
  long from_total = 0;
  double model = 0;
  double empirical = 0;
  double stderr_ = 0;
};

struct TransitionReport {
  long transitions = 0;
  std::vector<TransitionCell> cells;  // rows i <= max_i, columns i..max_j
};

/// Simulates i.i.d. sequences until `transitions` record-to-record steps have been seen.
TransitionReport record_chain_check(const StepLaw& law, long transitions, long horizon, long max_i, long max_j,
                                    std::uint64_t seed);

struct DichotomyReport {
  long runs = 0;
  long all_within_first = 0;    // every non-simple value is among the first m distinct record values
  long some_within_first = 0;   // at least one non-simple value among the first m distinct record values
  double fraction_all() const { return runs ? static_cast<double>(all_within_first) / runs : 0; }
  double fraction_some() const { return runs ? static_cast<double>(some_within_first) / runs : 0; }
};

DichotomyReport simplicity_dichotomy(const StepLaw& law, long runs, long horizon, long first_m, std::uint64_t seed);

struct EnvelopePair {
  std::vector<long> phi;  // phi[n-1] = φ(n) for n <= min(n_max, 4096); -1 when never reached
  std::vector<long> psi;  // psi[n-1] = ψ(n), same range
  std::vector<long> Phi;  // Phi[r] = Φ(r), r = 0..r_max
  std::vector<long> Psi;  // Psi[r] = Ψ(r)

  long Phi_at(long r) const;
  long Psi_at(long r) const;
};

/// φ(n) = min{j : F_j >= n^{-β/n}}, ψ(n) = min{j : F_j >= 1 - n^{-β}}, Φ(r) = 1 + max{n : φ(n) <= r},
/// Ψ(r) = ψ(Φ(r)), for r <= r_max.  Throws when Φ(r_max) would reach n_max.
EnvelopePair build_envelopes(const StepLaw& law, long n_max, long r_max, double exponent = 2.0);

/// α_j = min(1, c·(j+1)^{-e}); kind none means α ≡ 0.
struct AlphaSequence {
  enum class Kind { zero, constant, power } kind = Kind::zero;
  double c = 0;
  double exponent = 0;

  double at(long j) const;
  bool summable() const { return kind == Kind::zero || (kind == Kind::power && exponent > 1); }
  std::string describe() const;
};

struct MixedPopulationReport {
  long runs = 0;
  double mean_bad_epochs = 0;        // mean number of record epochs with ε = 1
  double stderr_bad_epochs = 0;
  double mean_expected_bad = 0;      // mean of Σ_k α_{R_k}
  double stderr_expected_bad = 0;
  double mean_last_bad = 0;          // mean index of the last bad record epoch (0 if none)
  long max_last_bad = 0;
  std::map<long, long> last_bad_distribution;
  long runs_all_bad = 0;             // runs where every record epoch had ε = 1
  std::vector<std::string> warnings;
};

MixedPopulationReport mixed_population_check(const StepLaw& law, const AlphaSequence& alpha, long runs, long horizon,
                                             std::uint64_t seed);

}  // namespace arboreal
