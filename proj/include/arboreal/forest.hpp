#pragma once

#include <string>
#include <vector>

#include "arboreal/ladder.hpp"

namespace arboreal {

/// Despiking forest restricted to a ball.  Vertex i is ball element i (BFS order).
struct Forest {
  int radius = 0;
  int horizon = 0;
  Ball vertices;
  std::vector<int> height;
  std::vector<int> parent;        // in-ball parent index, -1 for roots, truncated and cut vertices
  std::vector<Element> prefix;    // π(g) for spiked vertices (identity placeholder for roots)
  std::vector<Element> spike;     // σ of the decomposition
  std::vector<Element> postfix;   // h of the decomposition
  std::vector<int> prefix_height; // ⌈π(g)⌉, also for truncated vertices
  std::vector<bool> spiked;
  std::vector<bool> truncated;    // spiked, but π(g) lies outside the ball
  std::vector<bool> cut;          // edge removed by a constraint
  std::vector<int> roots;

  std::size_t size() const { return vertices.size(); }
  std::size_t edge_count() const;
  int index_of(const Element& g) const {
    auto it = vertices.index.find(g);
    return it == vertices.index.end() ? -1 : it->second;
  }
};

/// Throws ScaleError when some ball element is AMBIGUOUS (the scale is not a ladder).
Forest build_forest(const Classifier& classifier, int radius, std::size_t budget = kDefaultBallBudget);
/// Same construction on an arbitrary finite vertex set; radius is reported as -1.
Forest build_forest_on(const Classifier& classifier, const FiniteSet& vertices);

struct ForestCheck {
  bool acyclic = true;
  std::size_t height_violations = 0;       // edges with ⌈π(g)⌉ >= ⌈g⌉
  std::size_t two_lower_neighbours = 0;    // vertices adjacent to two distinct lower vertices
  std::size_t components = 0;
  std::size_t closed_components = 0;       // no truncated or cut vertex
  std::size_t closed_without_unique_root = 0;
  std::size_t open_with_many_roots = 0;
  std::size_t roots_in_closed = 0;

  bool holds() const {
    return acyclic && height_violations == 0 && two_lower_neighbours == 0 && closed_without_unique_root == 0 &&
           open_with_many_roots == 0;
  }
};

/// Independent verification: colour-based cycle search and union-find components.
ForestCheck check_forest(const Forest& forest);

/// κ given as a table over parent heights 0..; values past the end repeat the last entry.
using Constraint = std::vector<long>;
Forest constrained_forest(const Forest& forest, const Constraint& kappa);
/// Upper bound on |π⁻¹(g)| in the constrained forest for a parent of height m.
std::size_t constrained_child_bound(const Classifier& classifier, int parent_height, const Constraint& kappa);

struct Ray {
  std::vector<Element> vertices;  // γ_0 .. γ_d
  std::vector<Element> spikes;    // σ_1 .. σ_d
  std::vector<Element> tails;     // h_1 .. h_d
  std::vector<int> heights;       // ⌈γ_0⌉ = 0, ⌈γ_k⌉ = n_k

  std::size_t depth() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

/// Rays of exactly the given depth produced by the Markov rules from roots in `root_domain`:
/// increasing heights n_k, σ_k ∈ Σ_{n_k}, h_k and (for k = 1) γ_0 in ball(Δ_{n_k}, λ(n_k)), γ_0 unspiked.
/// Requires a fast-growth gauge.
std::vector<Ray> generate_rays(const Classifier& classifier, int depth, const FiniteSet& root_domain);
/// Union of the gauge balls, the natural domain for γ_0.
FiniteSet gauge_root_domain(const Classifier& classifier);

/// Root-to-vertex paths with exactly `depth` edges, all vertices inside the forest ball.
std::vector<Ray> forest_paths(const Forest& forest, int depth);

/// λ(⌈γ_k⌉) - |γ_{k-1}|_{⌈γ_k⌉} for k = 1..d; -1 stands for any negative value.
std::vector<long> sharp_boundary_margin(const Classifier& classifier, const Ray& ray);

/// Ray from an unspiked root appending the first spike of each listed level; requires
/// |γ|_n <= λ(n)/2 before each step.
Ray half_gauge_ray(const Classifier& classifier, const Element& root, const std::vector<int>& levels);

/// Does g·γ_n = γ_{n+t} for every n of the last `window` indices where both sides exist?
bool stabilizes(const GroupModel& model, const Ray& ray, const Element& g, int shift, int window);

struct DotOverlay {
  std::vector<Element> circled;  // y_{T_k - 1}
  std::vector<Element> greyed;   // y_{T_k}
};

std::string export_dot(const GroupModel& model, const Forest& forest, const DotOverlay* overlay = nullptr);
std::string export_json(const GroupModel& model, const Forest& forest);

}  // namespace arboreal
