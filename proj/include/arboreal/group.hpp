#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace arboreal {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Canonical form of a group element.  The meaning of `code` depends on the model:
///   free group:   reduced word, letters +-1..+-rank
///   lamplighter:  [cursor, pos_1, val_1, pos_2, val_2, ...] with positions ascending, vals in 1..m-1
///   free product: [factor_1, exp_1, factor_2, exp_2, ...] with adjacent factors distinct
struct Element {
  std::uint32_t tag = 0;
  std::vector<std::int32_t> code;

  friend bool operator==(const Element& a, const Element& b) { return a.tag == b.tag && a.code == b.code; }
  friend bool operator!=(const Element& a, const Element& b) { return !(a == b); }
  /// Deterministic total order (code length first), used wherever output order matters.
  friend bool operator<(const Element& a, const Element& b) {
    if (a.code.size() != b.code.size()) return a.code.size() < b.code.size();
    return a.code < b.code;
  }
};

struct ElementHash {
  std::size_t operator()(const Element& g) const noexcept {
    std::uint64_t h = 1469598103934665603ull ^ g.tag;
    for (std::int32_t c : g.code) {
      h ^= static_cast<std::uint32_t>(c);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

using ElementSet = std::unordered_set<Element, ElementHash>;
template <class V>
using ElementMap = std::unordered_map<Element, V, ElementHash>;

enum class ModelKind { free_group, lamplighter, free_product };

class GroupModel {
 public:
  static GroupModel free_group(int rank);
  static GroupModel lamplighter(int modulus);
  static GroupModel free_product(std::vector<int> orders);
  /// Accepts "F2", "L2" (lamplighter Z_2 wr Z), "Z2*Z3".
  static GroupModel parse(std::string_view spec);

  ModelKind kind() const { return kind_; }
  int rank() const { return rank_; }
  int modulus() const { return modulus_; }
  const std::vector<int>& orders() const { return orders_; }
  std::uint32_t tag() const { return tag_; }
  std::string name() const;

  Element identity() const { return Element{tag_, {}}; }
  bool is_identity(const Element& g) const { return g.code.empty(); }
  Element multiply(const Element& g, const Element& h) const;
  Element inverse(const Element& g) const;
  Element power(const Element& g, long k) const;

  /// Canonicalizes textual input, e.g. "a b⁻¹ a²", "t² l₀ l₃ | m=2", "x y⁻¹".
  Element parse_element(std::string_view text) const;
  std::string format(const Element& g) const;

  /// Fixed symmetric generating set; its order defines lexicographic tie-breaks in searches.
  std::vector<Element> standard_generators() const;

  /// Length of the canonical form in standard generators (reduced word length or syllable count
  /// for free products); lamplighter returns the exact word length in {t, l}.
  int standard_length(const Element& g) const;

  friend bool operator==(const GroupModel& a, const GroupModel& b) { return a.tag_ == b.tag_; }
  friend bool operator!=(const GroupModel& a, const GroupModel& b) { return a.tag_ != b.tag_; }

 private:
  GroupModel(ModelKind kind, int rank, int modulus, std::vector<int> orders);
  void check(const Element& g) const;

  Element free_generator(int letter, int exponent) const;
  Element lamp(long position, int value) const;
  Element shift(long amount) const;
  Element syllable(int factor, long exponent) const;

  ModelKind kind_;
  int rank_ = 0;
  int modulus_ = 0;
  std::vector<int> orders_;
  std::uint32_t tag_ = 0;
};

struct GeneratingSet {
  std::vector<Element> elements;
  bool symmetric = false;

  /// Deduplicates, adds inverses, and sets the symmetric flag.
  static GeneratingSet symmetrized(const GroupModel& model, const std::vector<Element>& elems);
  bool verify_symmetric(const GroupModel& model) const;
};

inline constexpr std::size_t kDefaultBallBudget = 1'000'000;

/// Insertion-ordered set of elements; iteration order is deterministic.
struct FiniteSet {
  std::vector<Element> elements;
  ElementMap<int> index;

  FiniteSet() = default;
  explicit FiniteSet(const std::vector<Element>& elems) {
    for (const auto& g : elems) insert(g);
  }
  bool insert(const Element& g) {
    if (index.count(g)) return false;
    index.emplace(g, static_cast<int>(elements.size()));
    elements.push_back(g);
    return true;
  }
  bool contains(const Element& g) const { return index.count(g) != 0; }
  std::size_t size() const { return elements.size(); }
};

/// Products of at most `radius` elements of gens ∪ {e}, in BFS order with distances.
struct Ball : FiniteSet {
  std::vector<int> distance;
};

Ball ball(const GroupModel& model, const GeneratingSet& gens, int radius,
          std::size_t budget = kDefaultBallBudget);

/// Word length of g w.r.t. gens if it is at most cutoff; std::nullopt stands for OVER.
std::optional<int> bounded_length(const GroupModel& model, const Element& g, const GeneratingSet& gens,
                                  int cutoff, std::size_t budget = kDefaultBallBudget);

}  // namespace arboreal
