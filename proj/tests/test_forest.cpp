#include <gtest/gtest.h>

#include <random>
#include <set>

#include "arboreal/forest.hpp"
#include "arboreal/presets.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace arboreal;

namespace {

const Classifier& fast_classifier() {
  static const Classifier c(build_recipe(ladder_recipe("z2z3-fast")));
  return c;
}

const Classifier& f2_classifier() {
  static const Classifier c(build_recipe(ladder_recipe("f2")));
  return c;
}

using Path = std::vector<Element>;

std::set<Path> vertex_paths(const std::vector<Ray>& rays, const Forest& f, const FiniteSet& domain) {
  std::set<Path> out;
  for (const auto& r : rays) {
    bool inside = domain.contains(r.vertices.front());
    for (const auto& v : r.vertices) inside &= f.index_of(v) >= 0;
    if (inside) out.insert(r.vertices);
  }
  return out;
}

}  // namespace

TEST(Forest, RecipesSatisfyForestAxioms) {
  for (const char* name : {"f2", "l2", "z2z3-fast"}) {
    Classifier c(build_recipe(ladder_recipe(name)));
    Forest f = build_forest(c, 5);
    auto chk = check_forest(f);
    EXPECT_TRUE(chk.holds()) << name;
    EXPECT_TRUE(chk.acyclic);
    EXPECT_EQ(chk.height_violations, 0u);
    EXPECT_EQ(chk.two_lower_neighbours, 0u);
    EXPECT_EQ(chk.closed_without_unique_root, 0u);
    EXPECT_GT(chk.closed_components, 0u) << name;
    EXPECT_EQ(f.edge_count() + f.roots.size() + static_cast<std::size_t>(std::count(f.truncated.begin(), f.truncated.end(), true)),
              f.size());
  }
}

TEST(Forest, CollidingFixtureAborts) {
  Classifier c(colliding_fixture());
  EXPECT_THROW(build_forest(c, 4), ScaleError);
}

TEST(Forest, ParentsAreDecompositionPrefixes) {
  const auto& c = fast_classifier();
  Forest f = build_forest(c, 6);
  const auto& m = c.scale().model;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.spiked[i]) continue;
    EXPECT_EQ(m.multiply(m.multiply(f.prefix[i], f.spike[i]), f.postfix[i]), f.vertices.elements[i]);
    EXPECT_LT(f.prefix_height[i], f.height[i]);
  }
  EXPECT_EQ(f.roots.front(), 0);  // the identity comes first in BFS order
}

TEST(Forest, CheckerDetectsCorruption) {
  Forest f = build_forest(fast_classifier(), 5);
  std::size_t child = 0;
  while (f.parent[child] < 0) ++child;
  Forest cyc = f;
  cyc.parent[static_cast<std::size_t>(cyc.parent[child])] = static_cast<int>(child);
  EXPECT_FALSE(check_forest(cyc).acyclic);
  Forest two = f;
  two.spiked[child] = false;  // a second root in the child's component
  EXPECT_FALSE(check_forest(two).holds());
}

TEST(ConstrainedForest, CutsAndChildBound) {
  const auto& c = fast_classifier();
  Forest f = build_forest(c, 7);
  for (const Constraint& kappa : {Constraint{1}, Constraint{1, 2, 3}, Constraint{2, 3}, Constraint{100}}) {
    Forest t = constrained_forest(f, kappa);
    EXPECT_TRUE(check_forest(t).holds());
    std::vector<std::size_t> children(t.size(), 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.parent[i] >= 0) {
        ++children[static_cast<std::size_t>(t.parent[i])];
        long k = kappa[std::min<std::size_t>(static_cast<std::size_t>(t.height[static_cast<std::size_t>(t.parent[i])]), kappa.size() - 1)];
        EXPECT_LE(t.height[i], k);
      }
    }
    for (std::size_t i = 0; i < t.size(); ++i)
      EXPECT_LE(children[i], constrained_child_bound(c, t.height[i], kappa));
    // idempotent
    Forest tt = constrained_forest(t, kappa);
    EXPECT_EQ(tt.parent, t.parent);
  }
  EXPECT_EQ(constrained_forest(f, {100}).parent, f.parent);
}

TEST(Rays, MatchForestPathsOnFastInstance) {
  const auto& c = fast_classifier();
  Forest f = build_forest(c, 9);
  FiniteSet domain = gauge_root_domain(c);
  for (int depth = 0; depth <= 3; ++depth) {
    auto generated = vertex_paths(generate_rays(c, depth, domain), f, domain);
    auto read_off = vertex_paths(forest_paths(f, depth), f, domain);
    EXPECT_EQ(generated, read_off) << "depth " << depth;
    EXPECT_FALSE(generated.empty()) << "depth " << depth;
  }
}

TEST(Rays, HeightsIncreaseAndMarginsAreNonnegative) {
  const auto& c = fast_classifier();
  auto rays = generate_rays(c, 2, gauge_root_domain(c));
  ASSERT_FALSE(rays.empty());
  for (const auto& r : rays) {
    for (std::size_t k = 1; k < r.heights.size(); ++k) EXPECT_LT(r.heights[k - 1], r.heights[k]);
    for (long m : sharp_boundary_margin(c, r)) EXPECT_GE(m, 0);
    auto cls = c.classify(r.vertices.back());
    ASSERT_EQ(cls.kind, ClassKind::spiked);
    EXPECT_EQ(cls.parent(), r.vertices[r.vertices.size() - 2]);
  }
}

TEST(Rays, RequireFastGrowth) {
  EXPECT_THROW(generate_rays(f2_classifier(), 1, gauge_root_domain(f2_classifier())), ScaleError);
}

TEST(Rays, HalfGaugeRecipeKeepsHalfMargin) {
  const auto& c = fast_classifier();
  const auto& s = c.scale();
  Ray r = half_gauge_ray(c, s.model.identity(), {2, 3});
  auto margins = sharp_boundary_margin(c, r);
  ASSERT_EQ(margins.size(), 2u);
  for (std::size_t k = 0; k < margins.size(); ++k) EXPECT_GE(2 * margins[k], s.gauge(r.heights[k + 1]));
  EXPECT_THROW(half_gauge_ray(c, s.model.identity(), {1, 2}), std::invalid_argument);  // |σ_1|_2 = 1 > λ(2)/2
  EXPECT_THROW(half_gauge_ray(c, s.sigma[0].front(), {2}), std::invalid_argument);
}

TEST(Rays, Stabilizes) {
  const auto& m = fast_classifier().scale().model;
  Ray r;
  Element x = m.parse_element("x");
  r.vertices = {m.identity(), x, m.identity(), x};
  EXPECT_TRUE(stabilizes(m, r, x, 1, 3));
  EXPECT_FALSE(stabilizes(m, r, m.identity(), 1, 3));
  EXPECT_TRUE(stabilizes(m, r, m.identity(), 2, 2));
}

TEST(Export, DotIsDeterministicAndJsonParses) {
  const auto& c = fast_classifier();
  Forest f = build_forest(c, 4);
  DotOverlay ov{{f.vertices.elements[1]}, {f.vertices.elements[2]}};
  std::string a = export_dot(c.scale().model, f, &ov), b = export_dot(c.scale().model, build_forest(c, 4), &ov);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("shape=circle"), std::string::npos);
  EXPECT_NE(a.find("fillcolor=grey"), std::string::npos);
  std::size_t arrows = 0;
  for (std::size_t p = a.find("->"); p != std::string::npos; p = a.find("->", p + 1)) ++arrows;
  EXPECT_EQ(arrows, f.edge_count());

  auto j = nlohmann::json::parse(export_json(c.scale().model, f));
  ASSERT_EQ(j["vertices"].size(), f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& v = j["vertices"][i];
    EXPECT_EQ(v["height"].get<int>(), f.height[i]);
    EXPECT_EQ(v["parent"].is_null(), !f.spiked[i]);
  }
}

TEST(Forest, SampledDecompositionsUseGaugeBalls) {
  const auto& c = fast_classifier();
  const auto& s = c.scale();
  std::mt19937_64 rng(23);
  Forest f = build_forest(c, 6);
  for (int it = 0; it < 300; ++it) {
    std::size_t i = rng() % f.size();
    if (!f.spiked[i]) continue;
    auto cls = c.classify(f.vertices.elements[i]);
    EXPECT_EQ(cls.kind, ClassKind::spiked);
    EXPECT_EQ(cls.decompositions.front().spike, f.spike[i]);
    EXPECT_TRUE(s.in_sigma(f.spike[i], f.height[i]));
    EXPECT_TRUE(c.within_gauge(f.postfix[i], f.height[i]));
    EXPECT_TRUE(c.within_gauge(f.prefix[i], f.height[i]));
  }
}
