#include "arboreal/forest.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace arboreal {

std::size_t Forest::edge_count() const {
  return static_cast<std::size_t>(std::count_if(parent.begin(), parent.end(), [](int p) { return p >= 0; }));
}

namespace {

Forest forest_from_ball(const Classifier& classifier, Ball vertices, int radius) {
  const Scale& scale = classifier.scale();
  Forest f;
  f.radius = radius;
  f.horizon = scale.horizon();
  f.vertices = std::move(vertices);
  const std::size_t n = f.vertices.size();
  f.height.assign(n, 0);
  f.parent.assign(n, -1);
  f.prefix.assign(n, scale.model.identity());
  f.spike.assign(n, scale.model.identity());
  f.postfix.assign(n, scale.model.identity());
  f.prefix_height.assign(n, 0);
  f.spiked.assign(n, false);
  f.truncated.assign(n, false);
  f.cut.assign(n, false);

  for (std::size_t i = 0; i < n; ++i) {
    const Element& g = f.vertices.elements[i];
    auto c = classifier.classify(g);
    if (c.kind == ClassKind::ambiguous)
      throw ScaleError("not a ladder: " + scale.model.format(g) + " has " + std::to_string(c.decompositions.size()) +
                       " spike decompositions");
    if (c.kind == ClassKind::unspiked) {
      f.roots.push_back(static_cast<int>(i));
      continue;
    }
    const auto& d = c.decompositions.front();
    f.spiked[i] = true;
    f.height[i] = d.height;
    f.prefix[i] = d.prefix;
    f.spike[i] = d.spike;
    f.postfix[i] = d.postfix;
    f.prefix_height[i] = classifier.classify(d.prefix).height();
    int p = f.index_of(d.prefix);
    if (p < 0) f.truncated[i] = true;
    else f.parent[i] = p;
  }
  return f;
}

}  // namespace

Forest build_forest(const Classifier& classifier, int radius, std::size_t budget) {
  const Scale& scale = classifier.scale();
  return forest_from_ball(classifier, ball(scale.model, scale.delta(scale.horizon() + 1), radius, budget), radius);
}

Forest build_forest_on(const Classifier& classifier, const FiniteSet& vertices) {
  Ball b;
  for (const auto& g : vertices.elements) b.insert(g);
  b.distance.assign(b.size(), -1);
  return forest_from_ball(classifier, std::move(b), -1);
}

namespace {

struct UnionFind {
  std::vector<int> up;
  explicit UnionFind(std::size_t n) : up(n) { std::iota(up.begin(), up.end(), 0); }
  int find(int x) {
    while (up[static_cast<std::size_t>(x)] != x) x = up[static_cast<std::size_t>(x)] = up[static_cast<std::size_t>(up[static_cast<std::size_t>(x)])];
    return x;
  }
  void unite(int a, int b) { up[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace

ForestCheck check_forest(const Forest& f) {
  ForestCheck out;
  const std::size_t n = f.size();

  // 0 white, 1 on the current chain, 2 finished
  std::vector<char> colour(n, 0);
  for (std::size_t s = 0; s < n && out.acyclic; ++s) {
    std::vector<int> chain;
    int v = static_cast<int>(s);
    while (v >= 0 && colour[static_cast<std::size_t>(v)] == 0) {
      colour[static_cast<std::size_t>(v)] = 1;
      chain.push_back(v);
      v = f.parent[static_cast<std::size_t>(v)];
    }
    if (v >= 0 && colour[static_cast<std::size_t>(v)] == 1) out.acyclic = false;
    for (int c : chain) colour[static_cast<std::size_t>(c)] = 2;
  }

  std::vector<std::vector<int>> adjacent(n);
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    int p = f.parent[i];
    if (p < 0) continue;
    if (f.height[static_cast<std::size_t>(p)] >= f.height[i]) ++out.height_violations;
    adjacent[i].push_back(p);
    adjacent[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
    uf.unite(static_cast<int>(i), p);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> lower;
    for (int u : adjacent[i])
      if (f.height[static_cast<std::size_t>(u)] < f.height[i]) lower.push_back(u);
    std::sort(lower.begin(), lower.end());
    lower.erase(std::unique(lower.begin(), lower.end()), lower.end());
    if (lower.size() >= 2) ++out.two_lower_neighbours;
  }

  std::vector<int> roots(n, 0);
  std::vector<char> open(n, 0), seen(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = static_cast<std::size_t>(uf.find(static_cast<int>(i)));
    if (!f.spiked[i]) ++roots[c];
    if (f.truncated[i] || f.cut[i]) open[c] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto c = static_cast<std::size_t>(uf.find(static_cast<int>(i)));
    if (seen[c]) continue;
    seen[c] = 1;
    ++out.components;
    if (open[c]) {
      if (roots[c] > 1) ++out.open_with_many_roots;
    } else {
      ++out.closed_components;
      out.roots_in_closed += static_cast<std::size_t>(roots[c]);
      if (roots[c] != 1) ++out.closed_without_unique_root;
    }
  }
  return out;
}

namespace {

long kappa_at(const Constraint& kappa, int m) {
  if (kappa.empty()) throw std::invalid_argument("empty constraint table");
  return kappa[std::min(static_cast<std::size_t>(m), kappa.size() - 1)];
}

}  // namespace

Forest constrained_forest(const Forest& forest, const Constraint& kappa) {
  Forest f = forest;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.spiked[i]) continue;
    if (f.height[i] > kappa_at(kappa, f.prefix_height[i])) {
      f.cut[i] = true;
      f.parent[i] = -1;
      f.truncated[i] = false;
    }
  }
  return f;
}

std::size_t constrained_child_bound(const Classifier& classifier, int parent_height, const Constraint& kappa) {
  const Scale& scale = classifier.scale();
  long top = std::min<long>(kappa_at(kappa, parent_height), scale.horizon());
  std::size_t bound = 0;
  for (long n = parent_height + 1; n <= top; ++n) {
    auto idx = static_cast<std::size_t>(n - 1);
    bound += scale.sigma[idx].size() * classifier.gauge_ball(static_cast<int>(n)).size();
  }
  return bound;
}

FiniteSet gauge_root_domain(const Classifier& classifier) {
  FiniteSet out;
  for (int n = 1; n <= classifier.scale().horizon(); ++n)
    for (const auto& g : classifier.gauge_ball(n).elements) out.insert(g);
  return out;
}

namespace {

void extend_rays(const Classifier& classifier, Ray& ray, int remaining, std::vector<Ray>& out) {
  if (remaining == 0) {
    out.push_back(ray);
    return;
  }
  const Scale& scale = classifier.scale();
  const GroupModel& model = scale.model;
  const Element base = ray.vertices.back();
  const bool first = ray.vertices.size() == 1;
  // Heights must still leave room for the remaining steps.
  for (int n = ray.heights.back() + 1; n <= scale.horizon() - remaining + 1; ++n) {
    if (first && !classifier.within_gauge(base, n)) continue;
    for (const auto& s : scale.sigma[static_cast<std::size_t>(n - 1)]) {
      Element bs = model.multiply(base, s);
      for (const auto& h : classifier.gauge_ball(n).elements) {
        ray.vertices.push_back(model.multiply(bs, h));
        ray.spikes.push_back(s);
        ray.tails.push_back(h);
        ray.heights.push_back(n);
        extend_rays(classifier, ray, remaining - 1, out);
        ray.vertices.pop_back();
        ray.spikes.pop_back();
        ray.tails.pop_back();
        ray.heights.pop_back();
      }
    }
  }
}

}  // namespace

std::vector<Ray> generate_rays(const Classifier& classifier, int depth, const FiniteSet& root_domain) {
  if (depth < 0) throw std::invalid_argument("ray depth must be nonnegative");
  if (!fast_growth_check(classifier.scale().lambda))
    throw ScaleError("ray generation requires a fast-growth gauge");
  std::vector<Ray> out;
  for (const auto& g : root_domain.elements) {
    if (classifier.classify(g).kind != ClassKind::unspiked) continue;
    Ray ray;
    ray.vertices.push_back(g);
    ray.heights.push_back(0);
    extend_rays(classifier, ray, depth, out);
  }
  return out;
}

std::vector<Ray> forest_paths(const Forest& f, int depth) {
  std::vector<Ray> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::vector<int> chain{static_cast<int>(i)};
    bool ok = true;
    for (int k = 0; k < depth && ok; ++k) {
      int p = f.parent[static_cast<std::size_t>(chain.back())];
      if (p < 0) ok = false;
      else chain.push_back(p);
    }
    if (!ok || f.spiked[static_cast<std::size_t>(chain.back())]) continue;
    std::reverse(chain.begin(), chain.end());
    Ray ray;
    for (std::size_t k = 0; k < chain.size(); ++k) {
      auto v = static_cast<std::size_t>(chain[k]);
      ray.vertices.push_back(f.vertices.elements[v]);
      ray.heights.push_back(f.height[v]);
      if (k > 0) {
        ray.spikes.push_back(f.spike[v]);
        ray.tails.push_back(f.postfix[v]);
      }
    }
    out.push_back(std::move(ray));
  }
  return out;
}

std::vector<long> sharp_boundary_margin(const Classifier& classifier, const Ray& ray) {
  std::vector<long> out;
  const Scale& scale = classifier.scale();
  for (std::size_t k = 1; k < ray.vertices.size(); ++k) {
    int n = ray.heights[k];
    if (n < 1 || n > scale.horizon()) throw std::invalid_argument("ray height outside the tabulated levels");
    const Ball& b = classifier.gauge_ball(n);
    auto it = b.index.find(ray.vertices[k - 1]);
    if (it == b.index.end()) out.push_back(-1);
    else out.push_back(scale.gauge(n) - b.distance[static_cast<std::size_t>(it->second)]);
  }
  return out;
}

Ray half_gauge_ray(const Classifier& classifier, const Element& root, const std::vector<int>& levels) {
  const Scale& scale = classifier.scale();
  if (classifier.classify(root).kind != ClassKind::unspiked)
    throw std::invalid_argument("half-gauge ray needs an unspiked root");
  Ray ray;
  ray.vertices.push_back(root);
  ray.heights.push_back(0);
  for (int n : levels) {
    if (n <= ray.heights.back() || n > scale.horizon())
      throw std::invalid_argument("half-gauge levels must increase within the horizon");
    const Ball& b = classifier.gauge_ball(n);
    auto it = b.index.find(ray.vertices.back());
    if (it == b.index.end() || 2 * b.distance[static_cast<std::size_t>(it->second)] > scale.gauge(n))
      throw std::invalid_argument("level " + std::to_string(n) + ": current vertex exceeds half the gauge");
    const Element& s = scale.sigma[static_cast<std::size_t>(n - 1)].front();
    ray.vertices.push_back(scale.model.multiply(ray.vertices.back(), s));
    ray.spikes.push_back(s);
    ray.tails.push_back(scale.model.identity());
    ray.heights.push_back(n);
  }
  return ray;
}

bool stabilizes(const GroupModel& model, const Ray& ray, const Element& g, int shift, int window) {
  const int len = static_cast<int>(ray.vertices.size());
  if (window < 1 || len - shift < 1) return false;
  for (int n = std::max(0, len - shift - window); n < len - shift; ++n) {
    if (n + shift < 0) continue;
    if (model.multiply(g, ray.vertices[static_cast<std::size_t>(n)]) != ray.vertices[static_cast<std::size_t>(n + shift)])
      return false;
  }
  return true;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dot(const GroupModel& model, const Forest& f, const DotOverlay* overlay) {
  ElementSet circled, greyed;
  std::size_t outside = 0;
  if (overlay) {
    for (const auto& g : overlay->circled) {
      circled.insert(g);
      outside += f.index_of(g) < 0;
    }
    for (const auto& g : overlay->greyed) {
      greyed.insert(g);
      outside += f.index_of(g) < 0;
    }
  }
  std::ostringstream os;
  os << "digraph forest {\n  rankdir=BT;\n  node [shape=box, fontname=\"monospace\"];\n";
  os << "  // group " << model.name() << ", radius " << f.radius << ", " << f.size() << " vertices\n";
  if (outside) os << "  // " << outside << " overlay points outside the ball\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Element& g = f.vertices.elements[i];
    os << "  n" << i << " [label=\"" << dot_escape(model.format(g)) << " [" << f.height[i] << "]\"";
    std::vector<std::string> style;
    if (!f.spiked[i]) style.push_back("bold");
    if (f.truncated[i]) style.push_back("dashed");
    if (f.cut[i]) style.push_back("dotted");
    if (greyed.count(g)) style.push_back("filled");
    if (!style.empty()) {
      os << ", style=\"";
      for (std::size_t k = 0; k < style.size(); ++k) os << (k ? "," : "") << style[k];
      os << "\"";
    }
    if (greyed.count(g)) os << ", fillcolor=grey";
    if (circled.count(g)) os << ", shape=circle";
    os << "];\n";
  }
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.parent[i] >= 0) os << "  n" << i << " -> n" << f.parent[i] << ";\n";
  os << "}\n";
  return os.str();
}

std::string export_json(const GroupModel& model, const Forest& f) {
  nlohmann::ordered_json j;
  j["group"] = model.name();
  j["radius"] = f.radius;
  j["horizon"] = f.horizon;
  auto& vs = j["vertices"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < f.size(); ++i) {
    nlohmann::ordered_json v;
    v["element"] = model.format(f.vertices.elements[i]);
    v["height"] = f.height[i];
    if (f.spiked[i] && !f.cut[i]) v["parent"] = model.format(f.prefix[i]);
    else v["parent"] = nullptr;
    v["truncated"] = static_cast<bool>(f.truncated[i]);
    v["cut"] = static_cast<bool>(f.cut[i]);
    vs.push_back(std::move(v));
  }
  return j.dump(1);
}

}  // namespace arboreal
