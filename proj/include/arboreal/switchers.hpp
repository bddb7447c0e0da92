#pragma once

#include <optional>
#include <string>
#include <vector>

#include "arboreal/group.hpp"

namespace arboreal {

/// Relation sigma * z = z_prime * sigma_prime with (z, z_prime) != (e, e).
struct SwitchWitness {
  Element sigma, z, z_prime, sigma_prime;
};

struct SwitchResult {
  bool holds = true;
  std::optional<SwitchWitness> witness;
};

/// Pairwise decision: Sigma is Z-switching.  Requires e not in Sigma.
SwitchResult is_switching_set(const GroupModel& model, const std::vector<Element>& sigma, const FiniteSet& z);

/// Independent route: Sigma Ż ∩ Z Sigma = ∅ and Sigma Z ∩ Ż Sigma = ∅, where Ż = Z \ {e}.
bool is_switching_set_by_products(const GroupModel& model, const std::vector<Element>& sigma, const FiniteSet& z);

/// Relation sigma * x * sigma^epsilon = y with x, y in Z, not both trivial.
struct SuperWitness {
  Element x, y;
  int epsilon = 1;
};

struct SuperResult {
  bool holds = true;
  std::optional<SuperWitness> witness;
};

SuperResult is_superswitching(const GroupModel& model, const Element& sigma, const FiniteSet& z);

struct SearchPolicy {
  /// Symmetric generating set whose word length orders the search; empty means standard generators.
  std::vector<Element> generators;
  std::size_t budget = 2'000'000;
  /// Candidates whose pair {sigma, sigma^-1} meets this set are skipped (keeps scale sets disjoint).
  FiniteSet exclude;
};

struct SearchCertificate {
  Element sigma;
  int word_length = 0;
  std::size_t candidates_examined = 0;
  std::size_t candidates_rejected = 0;
  std::size_t z_size = 0;
  /// One line per rejected candidate with its witness, then the accepting scan.
  std::vector<std::string> log;
};

/// First superswitcher in breadth-first order by word length with lexicographic tie-break.
/// Throws CapacityError (reporting the frontier size) when the budget runs out.
SearchCertificate find_superswitcher(const GroupModel& model, const FiniteSet& z, const SearchPolicy& policy,
                                     bool keep_log = false);

}  // namespace arboreal
