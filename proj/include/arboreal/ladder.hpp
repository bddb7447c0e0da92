#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arboreal/group.hpp"
#include "arboreal/switchers.hpp"

namespace arboreal {

class ScaleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an element might have a decomposition above the tabulated levels.
class HorizonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// closed: the tabulated levels are the whole scale.
/// open: higher levels are assumed to exist with Σ_m ∩ Δ_m^{k·λ(m)} = ∅ (k = escape_multiple);
///       classification then requires a certificate that no level above N can contribute.
enum class HorizonPolicy { closed, open };

struct Scale {
  GroupModel model;
  std::vector<int> lambda;                     // lambda[n-1] = λ(n); may extend past the horizon
  std::vector<std::vector<Element>> sigma;     // sigma[n-1] = Σ_n, n = 1..N
  std::vector<std::vector<Element>> filling;   // filling[n] = A_n, n = 0..N
  HorizonPolicy policy = HorizonPolicy::closed;
  int escape_multiple = 5;
  /// Filled by make_scale: element -> 2·level + (1 if spike).
  ElementMap<int> level_index;

  int horizon() const { return static_cast<int>(sigma.size()); }
  int gauge(int n) const;
  /// Δ_n: Σ_i (i < n) and A_i (i < n) with inverses.  n ranges over 1..N+1.
  GeneratingSet delta(int n) const;
  /// ζ(g) = j when g ∈ Σ_j ∪ A_j, otherwise -1.
  int level_of(const Element& g) const;
  bool in_sigma(const Element& g, int n) const;
};

/// Validates the scale axioms plus global disjointness of every Σ_i and A_i.
Scale make_scale(const GroupModel& model, std::vector<int> lambda, std::vector<std::vector<Element>> sigma,
                 std::vector<std::vector<Element>> filling, HorizonPolicy policy = HorizonPolicy::closed);

struct SpikeDecomposition {
  Element prefix, spike, postfix;
  int height = 0;

  friend bool operator==(const SpikeDecomposition& a, const SpikeDecomposition& b) {
    return a.height == b.height && a.prefix == b.prefix && a.spike == b.spike && a.postfix == b.postfix;
  }
};

enum class ClassKind { unspiked, spiked, ambiguous };

struct Classification {
  ClassKind kind = ClassKind::unspiked;
  std::vector<SpikeDecomposition> decompositions;

  int height() const { return kind == ClassKind::spiked ? decompositions.front().height : 0; }
  /// Prefix-map value π(g); only valid for spiked elements.
  const Element& parent() const { return decompositions.front().prefix; }
};

/// Precomputes ball(Δ_n, λ(n)) for every level so classification is a sequence of hash lookups.
class Classifier {
 public:
  explicit Classifier(const Scale& scale, std::size_t budget = kDefaultBallBudget);

  const Scale& scale() const { return scale_; }
  /// Decompositions ordered by height, then prefix in BFS order, then spike order.
  std::vector<SpikeDecomposition> spike_decompositions(const Element& g) const;
  Classification classify(const Element& g) const;
  /// |h|_n <= λ(n), answered from the precomputed gauge ball.
  bool within_gauge(const Element& h, int n) const;
  const Ball& gauge_ball(int n) const { return gauge_balls_[static_cast<std::size_t>(n - 1)]; }

 private:
  void check_horizon(const Element& g) const;

  Scale scale_;
  std::vector<Ball> gauge_balls_;
  std::vector<std::vector<Element>> sigma_inverse_;
  GeneratingSet top_delta_;
  int horizon_cutoff_ = -1;
  std::size_t budget_;
};

/// Oracle route: every product p·σ·q with p, q in the gauge balls, grouped by product.
ElementMap<std::vector<SpikeDecomposition>> brute_force_decompositions(const Scale& scale,
                                                                       std::size_t budget = kDefaultBallBudget);

struct LevelCheck {
  int n = 0;
  int lambda = 0;
  std::size_t z_size = 0;
  bool escape = true;          // Σ_n ∩ Δ_n^{3λ(n)} = ∅
  bool switching = true;       // Σ_n is Δ_n^{5λ(n)}-switching
  bool switching_by_products = true;
  std::optional<SwitchWitness> witness;
  int escape_radius = 0;       // largest r <= 5λ(n) with Σ_n ∩ Δ_n^r = ∅
};

struct LadderReport {
  int ball_radius = 0;
  std::size_t ball_size = 0;
  std::size_t spiked = 0;
  std::size_t unspiked = 0;
  std::vector<std::pair<Element, std::vector<SpikeDecomposition>>> ambiguous;  // axiom (i)
  std::vector<std::pair<Element, Element>> height_violations;                  // axiom (ii): (g, π(g))
  std::vector<LevelCheck> levels;
  bool levels_checked = false;

  bool direct_axioms_hold() const { return ambiguous.empty() && height_violations.empty(); }
  bool sufficient_condition_holds() const;
  bool escape_condition_holds() const;
};

struct CheckOptions {
  bool check_levels = true;
  std::size_t budget = kDefaultBallBudget;
};

LadderReport check_ladder(const Scale& scale, int ball_radius, const CheckOptions& options = {});

struct BuildOptions {
  std::size_t ball_budget = kDefaultBallBudget;
  std::size_t search_budget = 2'000'000;
  HorizonPolicy policy = HorizonPolicy::closed;
};

struct BuildLog {
  std::vector<SearchCertificate> certificates;  // one per level
};

Scale build_ladder(const GroupModel& model, const std::vector<int>& lambda,
                   const std::vector<std::vector<Element>>& filling, int levels, const BuildOptions& options = {},
                   BuildLog* log = nullptr);

/// λ(n+1) >= n + 2(λ(1) + ... + λ(n)) for every tabulated n.
bool fast_growth_check(const std::vector<int>& lambda);

std::string serialize_scale(const Scale& scale);
Scale parse_scale(const std::string& text);

}  // namespace arboreal
