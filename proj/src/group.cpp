#include "arboreal/group.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

namespace arboreal {
namespace {

constexpr std::string_view kFreeLetters = "abcdfghijkmnopqrsuvwxyz";
constexpr std::string_view kFactorLetters = "xyzuvwpqrsabcdfghijk";

std::uint32_t mix_tag(ModelKind kind, int rank, int modulus, const std::vector<int>& orders) {
  std::uint32_t h = 2166136261u;
  auto put = [&h](std::uint32_t v) {
    h ^= v;
    h *= 16777619u;
  };
  put(static_cast<std::uint32_t>(kind) + 1);
  put(static_cast<std::uint32_t>(rank));
  put(static_cast<std::uint32_t>(modulus));
  for (int o : orders) put(static_cast<std::uint32_t>(o));
  return h == 0 ? 1 : h;
}

long mod(long a, long m) {
  long r = a % m;
  return r < 0 ? r + m : r;
}

// UTF-8 decoding with code-point positions for error messages.
struct Cursor {
  std::string_view text;
  std::size_t byte = 0;
  std::size_t cp = 0;

  bool done() const { return byte >= text.size(); }

  char32_t peek(std::size_t* width = nullptr) const {
    auto u = static_cast<unsigned char>(text[byte]);
    std::size_t w = 1;
    char32_t c = u;
    if (u >= 0xF0) {
      w = 4;
      c = u & 0x07;
    } else if (u >= 0xE0) {
      w = 3;
      c = u & 0x0F;
    } else if (u >= 0xC0) {
      w = 2;
      c = u & 0x1F;
    }
    if (byte + w > text.size()) throw ParseError("truncated UTF-8 sequence", cp);
    for (std::size_t i = 1; i < w; ++i) c = (c << 6) | (static_cast<unsigned char>(text[byte + i]) & 0x3F);
    if (width) *width = w;
    return c;
  }

  void advance() {
    std::size_t w = 1;
    peek(&w);
    byte += w;
    ++cp;
  }
};

int superscript_digit(char32_t c) {
  switch (c) {
    case U'⁰': return 0;
    case U'¹': return 1;
    case U'²': return 2;
    case U'³': return 3;
    case U'⁴': return 4;
    case U'⁵': return 5;
    case U'⁶': return 6;
    case U'⁷': return 7;
    case U'⁸': return 8;
    case U'⁹': return 9;
    default: return -1;
  }
}

int subscript_digit(char32_t c) {
  if (c >= U'₀' && c <= U'₉') return static_cast<int>(c - U'₀');
  return -1;
}

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r'; }

// Reads an optional exponent: Unicode superscripts or "^-12".
long read_exponent(Cursor& cur) {
  if (cur.done()) return 1;
  char32_t c = cur.peek();
  if (c == U'^') {
    std::size_t start = cur.cp;
    cur.advance();
    bool neg = false;
    if (!cur.done() && cur.peek() == U'-') {
      neg = true;
      cur.advance();
    }
    if (cur.done() || cur.peek() < U'0' || cur.peek() > U'9') throw ParseError("expected digits after '^'", start);
    long v = 0;
    while (!cur.done() && cur.peek() >= U'0' && cur.peek() <= U'9') {
      v = v * 10 + static_cast<long>(cur.peek() - U'0');
      cur.advance();
    }
    return neg ? -v : v;
  }
  if (c == U'⁻' || superscript_digit(c) >= 0) {
    std::size_t start = cur.cp;
    bool neg = false;
    if (c == U'⁻') {
      neg = true;
      cur.advance();
    }
    if (cur.done() || superscript_digit(cur.peek()) < 0) throw ParseError("expected superscript digits", start);
    long v = 0;
    while (!cur.done() && superscript_digit(cur.peek()) >= 0) {
      v = v * 10 + superscript_digit(cur.peek());
      cur.advance();
    }
    return neg ? -v : v;
  }
  return 1;
}

// Reads an optional lamp index: Unicode subscripts or "_-3". Returns 0 when absent.
long read_subscript(Cursor& cur) {
  if (cur.done()) return 0;
  char32_t c = cur.peek();
  if (c == U'_') {
    std::size_t start = cur.cp;
    cur.advance();
    bool neg = false;
    if (!cur.done() && cur.peek() == U'-') {
      neg = true;
      cur.advance();
    }
    if (cur.done() || cur.peek() < U'0' || cur.peek() > U'9') throw ParseError("expected digits after '_'", start);
    long v = 0;
    while (!cur.done() && cur.peek() >= U'0' && cur.peek() <= U'9') {
      v = v * 10 + static_cast<long>(cur.peek() - U'0');
      cur.advance();
    }
    return neg ? -v : v;
  }
  if (c == U'₋' || subscript_digit(c) >= 0) {
    std::size_t start = cur.cp;
    bool neg = false;
    if (c == U'₋') {
      neg = true;
      cur.advance();
    }
    if (cur.done() || subscript_digit(cur.peek()) < 0) throw ParseError("expected subscript digits", start);
    long v = 0;
    while (!cur.done() && subscript_digit(cur.peek()) >= 0) {
      v = v * 10 + subscript_digit(cur.peek());
      cur.advance();
    }
    return neg ? -v : v;
  }
  return 0;
}

std::string superscript(long v) {
  static const char* digits[] = {"⁰", "¹", "²", "³", "⁴", "⁵", "⁶", "⁷", "⁸", "⁹"};
  std::string out;
  if (v < 0) {
    out += "⁻";
    v = -v;
  }
  std::string s = std::to_string(v);
  for (char ch : s) out += digits[ch - '0'];
  return out;
}

std::string subscript(long v) {
  static const char* digits[] = {"₀", "₁", "₂", "₃", "₄", "₅", "₆", "₇", "₈", "₉"};
  std::string out;
  if (v < 0) {
    out += "₋";
    v = -v;
  }
  std::string s = std::to_string(v);
  for (char ch : s) out += digits[ch - '0'];
  return out;
}

std::string with_exponent(std::string base, long e) {
  if (e != 1) base += superscript(e);
  return base;
}

}  // namespace

GroupModel::GroupModel(ModelKind kind, int rank, int modulus, std::vector<int> orders)
    : kind_(kind), rank_(rank), modulus_(modulus), orders_(std::move(orders)) {
  tag_ = mix_tag(kind_, rank_, modulus_, orders_);
}

GroupModel GroupModel::free_group(int rank) {
  if (rank < 2) throw std::invalid_argument("free group must have rank >= 2 to be ICC");
  if (rank > static_cast<int>(kFreeLetters.size())) throw std::invalid_argument("free group rank too large");
  return GroupModel(ModelKind::free_group, rank, 0, {});
}

GroupModel GroupModel::lamplighter(int modulus) {
  if (modulus < 2) throw std::invalid_argument("lamplighter modulus must be >= 2");
  return GroupModel(ModelKind::lamplighter, 0, modulus, {});
}

GroupModel GroupModel::free_product(std::vector<int> orders) {
  if (orders.size() < 2) throw std::invalid_argument("free product needs at least two factors");
  if (orders.size() > kFactorLetters.size()) throw std::invalid_argument("too many free factors");
  for (int o : orders)
    if (o < 2) throw std::invalid_argument("free factors must be finite cyclic of order >= 2");
  if (orders.size() == 2 && orders[0] == 2 && orders[1] == 2)
    throw std::invalid_argument("Z2*Z2 is virtually abelian, not ICC");
  return GroupModel(ModelKind::free_product, 0, 0, std::move(orders));
}

GroupModel GroupModel::parse(std::string_view spec) {
  auto number = [&](std::string_view s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw std::invalid_argument("bad group spec '" + std::string(spec) + "'");
    return std::atoi(std::string(s).c_str());
  };
  if (spec.size() >= 2 && spec[0] == 'F') return free_group(number(spec.substr(1)));
  if (spec.size() >= 2 && spec[0] == 'L') return lamplighter(number(spec.substr(1)));
  if (!spec.empty() && spec[0] == 'Z') {
    std::vector<int> orders;
    std::size_t start = 0;
    while (start <= spec.size()) {
      std::size_t star = spec.find('*', start);
      std::string_view part = spec.substr(start, star == std::string_view::npos ? std::string_view::npos : star - start);
      if (part.size() < 2 || part[0] != 'Z') throw std::invalid_argument("bad group spec '" + std::string(spec) + "'");
      orders.push_back(number(part.substr(1)));
      if (star == std::string_view::npos) break;
      start = star + 1;
    }
    return free_product(std::move(orders));
  }
  throw std::invalid_argument("unknown group spec '" + std::string(spec) + "'");
}

std::string GroupModel::name() const {
  switch (kind_) {
    case ModelKind::free_group: return "F" + std::to_string(rank_);
    case ModelKind::lamplighter: return "L" + std::to_string(modulus_);
    case ModelKind::free_product: {
      std::string s;
      for (std::size_t i = 0; i < orders_.size(); ++i) s += (i ? "*Z" : "Z") + std::to_string(orders_[i]);
      return s;
    }
  }
  return {};
}

void GroupModel::check(const Element& g) const {
  if (g.tag != tag_) throw ModelMismatch("element does not belong to group " + name());
}

Element GroupModel::multiply(const Element& g, const Element& h) const {
  check(g);
  check(h);
  Element out{tag_, {}};
  switch (kind_) {
    case ModelKind::free_group: {
      out.code = g.code;
      std::size_t i = 0;
      while (i < h.code.size() && !out.code.empty() && out.code.back() == -h.code[i]) {
        out.code.pop_back();
        ++i;
      }
      out.code.insert(out.code.end(), h.code.begin() + static_cast<long>(i), h.code.end());
      return out;
    }
    case ModelKind::lamplighter: {
      // (f, c)(g, d) = (f + g(. - c), c + d)
      std::int32_t c = g.code.empty() ? 0 : g.code[0];
      std::int32_t d = h.code.empty() ? 0 : h.code[0];
      out.code.push_back(c + d);
      std::size_t i = 1, j = 1;
      while (i < g.code.size() || j < h.code.size()) {
        bool take_g = j >= h.code.size() || (i < g.code.size() && g.code[i] < h.code[j] + c);
        bool take_h = i >= g.code.size() || (j < h.code.size() && h.code[j] + c < g.code[i]);
        if (take_g) {
          out.code.push_back(g.code[i]);
          out.code.push_back(g.code[i + 1]);
          i += 2;
        } else if (take_h) {
          out.code.push_back(h.code[j] + c);
          out.code.push_back(h.code[j + 1]);
          j += 2;
        } else {
          std::int32_t v = static_cast<std::int32_t>(mod(g.code[i + 1] + h.code[j + 1], modulus_));
          if (v != 0) {
            out.code.push_back(g.code[i]);
            out.code.push_back(v);
          }
          i += 2;
          j += 2;
        }
      }
      if (out.code.size() == 1 && out.code[0] == 0) out.code.clear();
      return out;
    }
    case ModelKind::free_product: {
      out.code = g.code;
      std::size_t j = 0;
      while (j < h.code.size()) {
        if (out.code.empty() || out.code[out.code.size() - 2] != h.code[j]) break;
        int f = h.code[j];
        std::int32_t e = static_cast<std::int32_t>(mod(out.code.back() + h.code[j + 1], orders_[f]));
        j += 2;
        if (e != 0) {
          out.code.back() = e;
          break;
        }
        out.code.pop_back();
        out.code.pop_back();
      }
      out.code.insert(out.code.end(), h.code.begin() + static_cast<long>(j), h.code.end());
      return out;
    }
  }
  return out;
}

Element GroupModel::inverse(const Element& g) const {
  check(g);
  Element out{tag_, {}};
  switch (kind_) {
    case ModelKind::free_group:
      out.code.assign(g.code.rbegin(), g.code.rend());
      for (auto& x : out.code) x = -x;
      return out;
    case ModelKind::lamplighter: {
      // (f, c)^-1 = (-f(. + c), -c)
      if (g.code.empty()) return out;
      std::int32_t c = g.code[0];
      out.code.push_back(-c);
      for (std::size_t i = 1; i < g.code.size(); i += 2) {
        out.code.push_back(g.code[i] - c);
        out.code.push_back(static_cast<std::int32_t>(mod(-g.code[i + 1], modulus_)));
      }
      if (out.code.size() == 1 && out.code[0] == 0) out.code.clear();
      return out;
    }
    case ModelKind::free_product:
      for (std::size_t i = g.code.size(); i >= 2; i -= 2) {
        int f = g.code[i - 2];
        out.code.push_back(f);
        out.code.push_back(static_cast<std::int32_t>(mod(-g.code[i - 1], orders_[f])));
      }
      return out;
  }
  return out;
}

Element GroupModel::power(const Element& g, long k) const {
  Element base = k < 0 ? inverse(g) : g;
  long n = k < 0 ? -k : k;
  Element acc = identity();
  while (n > 0) {
    if (n & 1) acc = multiply(acc, base);
    base = multiply(base, base);
    n >>= 1;
  }
  return acc;
}

Element GroupModel::free_generator(int letter, int exponent) const {
  Element out{tag_, {}};
  out.code.assign(static_cast<std::size_t>(std::abs(exponent)), exponent < 0 ? -letter : letter);
  return out;
}

Element GroupModel::lamp(long position, int value) const {
  Element out{tag_, {}};
  long v = mod(value, modulus_);
  if (v == 0) return out;
  out.code = {0, static_cast<std::int32_t>(position), static_cast<std::int32_t>(v)};
  return out;
}

Element GroupModel::shift(long amount) const {
  Element out{tag_, {}};
  if (amount != 0) out.code = {static_cast<std::int32_t>(amount)};
  return out;
}

Element GroupModel::syllable(int factor, long exponent) const {
  Element out{tag_, {}};
  long e = mod(exponent, orders_[factor]);
  if (e != 0) out.code = {factor, static_cast<std::int32_t>(e)};
  return out;
}

Element GroupModel::parse_element(std::string_view text) const {
  Cursor cur{text};
  Element acc = identity();
  while (!cur.done()) {
    char32_t c = cur.peek();
    if (is_space(c) || c == U'·' || c == U'*' || c == U'.') {
      cur.advance();
      continue;
    }
    std::size_t pos = cur.cp;
    if (c == U'|') {
      if (kind_ != ModelKind::lamplighter) throw ParseError("'|' annotation only valid for lamplighter", pos);
      cur.advance();
      std::string rest;
      while (!cur.done()) {
        char32_t d = cur.peek();
        if (!is_space(d)) rest += static_cast<char>(d);
        cur.advance();
      }
      if (rest.rfind("m=", 0) != 0) throw ParseError("expected 'm=<modulus>' after '|'", pos);
      std::string digits = rest.substr(2);
      if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
        throw ParseError("bad modulus annotation", pos);
      if (std::atoi(digits.c_str()) != modulus_)
        throw ParseError("modulus annotation does not match group " + name(), pos);
      break;
    }
    if (c == U'e' || c == U'1') {
      cur.advance();
      read_exponent(cur);
      continue;
    }
    if (c >= 0x80 || !((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'))) throw ParseError("unexpected symbol", pos);
    char letter = static_cast<char>(c);
    cur.advance();
    Element factor;
    switch (kind_) {
      case ModelKind::free_group: {
        auto at = kFreeLetters.find(letter);
        if (at == std::string_view::npos || static_cast<int>(at) >= rank_)
          throw ParseError(std::string("unknown generator '") + letter + "'", pos);
        long k = read_exponent(cur);
        factor = power(free_generator(static_cast<int>(at) + 1, 1), k);
        break;
      }
      case ModelKind::lamplighter: {
        if (letter == 't') {
          factor = shift(read_exponent(cur));
        } else if (letter == 'l') {
          long p = read_subscript(cur);
          long k = read_exponent(cur);
          factor = lamp(p, static_cast<int>(mod(k, modulus_)));
        } else {
          throw ParseError(std::string("unknown generator '") + letter + "'", pos);
        }
        break;
      }
      case ModelKind::free_product: {
        auto at = kFactorLetters.find(letter);
        if (at == std::string_view::npos || at >= orders_.size())
          throw ParseError(std::string("unknown generator '") + letter + "'", pos);
        factor = syllable(static_cast<int>(at), read_exponent(cur));
        break;
      }
    }
    acc = multiply(acc, factor);
  }
  return acc;
}

std::string GroupModel::format(const Element& g) const {
  check(g);
  if (g.code.empty()) return "e";
  std::string out;
  auto sep = [&out] {
    if (!out.empty()) out += ' ';
  };
  switch (kind_) {
    case ModelKind::free_group: {
      std::size_t i = 0;
      while (i < g.code.size()) {
        std::size_t j = i;
        while (j < g.code.size() && g.code[j] == g.code[i]) ++j;
        long run = static_cast<long>(j - i);
        int letter = std::abs(g.code[i]);
        sep();
        out += with_exponent(std::string(1, kFreeLetters[static_cast<std::size_t>(letter - 1)]), g.code[i] < 0 ? -run : run);
        i = j;
      }
      return out;
    }
    case ModelKind::lamplighter: {
      for (std::size_t i = 1; i < g.code.size(); i += 2) {
        sep();
        out += with_exponent("l" + subscript(g.code[i]), g.code[i + 1]);
      }
      if (g.code[0] != 0) {
        sep();
        out += with_exponent("t", g.code[0]);
      }
      return out;
    }
    case ModelKind::free_product: {
      for (std::size_t i = 0; i < g.code.size(); i += 2) {
        int f = g.code[i];
        long e = g.code[i + 1];
        int n = orders_[static_cast<std::size_t>(f)];
        if (2 * e > n) e -= n;
        sep();
        out += with_exponent(std::string(1, kFactorLetters[static_cast<std::size_t>(f)]), e);
      }
      return out;
    }
  }
  return out;
}

std::vector<Element> GroupModel::standard_generators() const {
  std::vector<Element> gens;
  switch (kind_) {
    case ModelKind::free_group:
      for (int i = 1; i <= rank_; ++i) {
        gens.push_back(free_generator(i, 1));
        gens.push_back(free_generator(i, -1));
      }
      break;
    case ModelKind::lamplighter:
      gens.push_back(shift(1));
      gens.push_back(shift(-1));
      gens.push_back(lamp(0, 1));
      if (modulus_ > 2) gens.push_back(lamp(0, modulus_ - 1));
      break;
    case ModelKind::free_product:
      for (std::size_t f = 0; f < orders_.size(); ++f) {
        gens.push_back(syllable(static_cast<int>(f), 1));
        if (orders_[f] > 2) gens.push_back(syllable(static_cast<int>(f), -1));
      }
      break;
  }
  return gens;
}

int GroupModel::standard_length(const Element& g) const {
  check(g);
  switch (kind_) {
    case ModelKind::free_group: return static_cast<int>(g.code.size());
    case ModelKind::lamplighter: {
      if (g.code.empty()) return 0;
      long c = g.code[0];
      long lo = std::min(0L, c), hi = std::max(0L, c);
      long lamps = 0;
      for (std::size_t i = 1; i < g.code.size(); i += 2) {
        lo = std::min<long>(lo, g.code[i]);
        hi = std::max<long>(hi, g.code[i]);
        long v = g.code[i + 1];
        lamps += std::min(v, modulus_ - v);
      }
      long left_first = -lo + (hi - lo) + (hi - c);
      long right_first = hi + (hi - lo) + (c - lo);
      return static_cast<int>(lamps + std::min(left_first, right_first));
    }
    case ModelKind::free_product: {
      int len = 0;
      for (std::size_t i = 0; i < g.code.size(); i += 2) {
        int n = orders_[static_cast<std::size_t>(g.code[i])];
        int e = g.code[i + 1];
        len += std::min(e, n - e);
      }
      return len;
    }
  }
  return 0;
}

GeneratingSet GeneratingSet::symmetrized(const GroupModel& model, const std::vector<Element>& elems) {
  GeneratingSet out;
  ElementSet seen;
  for (const auto& g : elems) {
    for (const auto& h : {g, model.inverse(g)}) {
      if (seen.insert(h).second) out.elements.push_back(h);
    }
  }
  out.symmetric = true;
  return out;
}

bool GeneratingSet::verify_symmetric(const GroupModel& model) const {
  ElementSet s(elements.begin(), elements.end());
  for (const auto& g : elements)
    if (!s.count(model.inverse(g))) return false;
  return true;
}

Ball ball(const GroupModel& model, const GeneratingSet& gens, int radius, std::size_t budget) {
  if (radius < 0) throw std::invalid_argument("ball radius must be >= 0");
  Ball b;
  b.elements.push_back(model.identity());
  b.distance.push_back(0);
  b.index.emplace(model.identity(), 0);
  std::size_t layer_begin = 0;
  for (int r = 1; r <= radius; ++r) {
    std::size_t layer_end = b.elements.size();
    for (std::size_t i = layer_begin; i < layer_end; ++i) {
      for (const auto& s : gens.elements) {
        Element next = model.multiply(b.elements[i], s);
        if (b.index.count(next)) continue;
        if (b.elements.size() >= budget)
          throw CapacityError("ball budget of " + std::to_string(budget) + " elements exceeded at radius " +
                              std::to_string(r));
        b.index.emplace(next, static_cast<int>(b.elements.size()));
        b.elements.push_back(std::move(next));
        b.distance.push_back(r);
      }
    }
    if (b.elements.size() == layer_end) break;
    layer_begin = layer_end;
  }
  return b;
}

std::optional<int> bounded_length(const GroupModel& model, const Element& g, const GeneratingSet& gens, int cutoff,
                                  std::size_t budget) {
  if (cutoff < 0) throw std::invalid_argument("cutoff must be >= 0");
  if (model.is_identity(g)) return 0;
  std::vector<Element> inv;
  inv.reserve(gens.elements.size());
  for (const auto& s : gens.elements) inv.push_back(model.inverse(s));

  ElementMap<int> fwd{{model.identity(), 0}}, bwd{{g, 0}};
  std::vector<Element> ffront{model.identity()}, bfront{g};
  int fd = 0, bd = 0;
  while (fd + bd < cutoff) {
    bool forward = ffront.size() <= bfront.size();
    auto& front = forward ? ffront : bfront;
    auto& mine = forward ? fwd : bwd;
    auto& other = forward ? bwd : fwd;
    const auto& steps = forward ? gens.elements : inv;
    int depth = (forward ? fd : bd) + 1;
    std::vector<Element> next;
    std::optional<int> best;
    for (const auto& x : front) {
      for (const auto& s : steps) {
        Element y = model.multiply(x, s);
        if (mine.count(y)) continue;
        auto hit = other.find(y);
        if (hit != other.end()) {
          int total = depth + hit->second;
          if (!best || total < *best) best = total;
        }
        mine.emplace(y, depth);
        next.push_back(std::move(y));
        if (mine.size() > budget) throw CapacityError("bounded_length search budget exceeded");
      }
    }
    if (best) return *best <= cutoff ? best : std::nullopt;
    if (next.empty()) return std::nullopt;
    front = std::move(next);
    (forward ? fd : bd) = depth;
  }
  return std::nullopt;
}

}  // namespace arboreal
