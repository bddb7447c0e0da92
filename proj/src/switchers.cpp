#include "arboreal/switchers.hpp"

#include <stdexcept>

namespace arboreal {

SwitchResult is_switching_set(const GroupModel& model, const std::vector<Element>& sigma, const FiniteSet& z) {
  for (const auto& s : sigma)
    if (model.is_identity(s)) throw std::invalid_argument("switching set must not contain the identity");
  for (const auto& s : sigma) {
    for (const auto& sp : sigma) {
      Element sp_inv = model.inverse(sp);
      for (const auto& x : z.elements) {
        Element zp = model.multiply(model.multiply(s, x), sp_inv);
        if (!z.contains(zp)) continue;
        if (model.is_identity(x) && model.is_identity(zp)) continue;
        return {false, SwitchWitness{s, x, zp, sp}};
      }
    }
  }
  return {true, std::nullopt};
}

bool is_switching_set_by_products(const GroupModel& model, const std::vector<Element>& sigma, const FiniteSet& z) {
  ElementSet sigma_zdot, z_sigma, sigma_z, zdot_sigma;
  for (const auto& s : sigma) {
    for (const auto& x : z.elements) {
      Element left = model.multiply(s, x);
      Element right = model.multiply(x, s);
      sigma_z.insert(left);
      z_sigma.insert(right);
      if (!model.is_identity(x)) {
        sigma_zdot.insert(left);
        zdot_sigma.insert(right);
      }
    }
  }
  for (const auto& g : sigma_zdot)
    if (z_sigma.count(g)) return false;
  for (const auto& g : sigma_z)
    if (zdot_sigma.count(g)) return false;
  return true;
}

SuperResult is_superswitching(const GroupModel& model, const Element& sigma, const FiniteSet& z) {
  if (model.is_identity(sigma)) throw std::invalid_argument("superswitcher candidate must not be the identity");
  Element inv = model.inverse(sigma);
  for (const auto& x : z.elements) {
    Element sx = model.multiply(sigma, x);
    Element conj = model.multiply(sx, inv);
    if (!model.is_identity(x) && z.contains(conj)) return {false, SuperWitness{x, conj, -1}};
    Element twist = model.multiply(sx, sigma);
    if (z.contains(twist) && !(model.is_identity(x) && model.is_identity(twist)))
      return {false, SuperWitness{x, twist, 1}};
  }
  return {true, std::nullopt};
}

SearchCertificate find_superswitcher(const GroupModel& model, const FiniteSet& z, const SearchPolicy& policy,
                                     bool keep_log) {
  std::vector<Element> gens = policy.generators.empty() ? model.standard_generators() : policy.generators;
  SearchCertificate cert;
  cert.z_size = z.size();

  ElementSet seen{model.identity()};
  std::vector<Element> layer{model.identity()};
  int depth = 0;
  while (!layer.empty()) {
    std::vector<Element> next;
    ++depth;
    for (const auto& w : layer) {
      for (const auto& s : gens) {
        Element cand = model.multiply(w, s);
        if (!seen.insert(cand).second) continue;
        if (seen.size() > policy.budget)
          throw CapacityError("superswitcher search budget of " + std::to_string(policy.budget) +
                              " exhausted at word length " + std::to_string(depth) + "; frontier size " +
                              std::to_string(next.size() + layer.size()));
        next.push_back(cand);
        ++cert.candidates_examined;
        Element inv = model.inverse(cand);
        if (z.contains(cand) || z.contains(inv) || policy.exclude.contains(cand) || policy.exclude.contains(inv)) {
          ++cert.candidates_rejected;
          if (keep_log) cert.log.push_back("skip " + model.format(cand) + " : pair meets Z or excluded set");
          continue;
        }
        SuperResult r = is_superswitching(model, cand, z);
        if (!r.holds) {
          ++cert.candidates_rejected;
          if (keep_log) {
            const auto& w2 = *r.witness;
            cert.log.push_back("reject " + model.format(cand) + " : sigma (" + model.format(w2.x) + ") sigma^" +
                               (w2.epsilon > 0 ? "1" : "-1") + " = " + model.format(w2.y));
          }
          continue;
        }
        cert.sigma = cand;
        cert.word_length = depth;
        if (keep_log)
          cert.log.push_back("accept " + model.format(cand) + " : scanned " + std::to_string(z.size()) +
                             " elements x with sigma x sigma^-1 and sigma x sigma outside Z");
        return cert;
      }
    }
    layer = std::move(next);
  }
  throw CapacityError("superswitcher search ran out of candidates");
}

}  // namespace arboreal
