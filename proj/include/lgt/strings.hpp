#pragma once

// Flux strings between two static charges and the fixed-energy manifold of
// unbroken and broken minimal strings.
//
// A U(1) string is a path of raised links (b = 1) leaving the G = -1 source
// and entering the G = +1 sink. Gauss's law holds at an interior path site
// only if the path enters and leaves it along the link orientation, so every
// valid string is a monotone +x/+y path and has Manhattan length. Each
// direction reversal leaves a corner with G = +-2.

#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lgt/gauge_basis.hpp"
#include "lgt/lattice.hpp"
#include "lgt/models.hpp"
#include "lgt/operators.hpp"

namespace lgt {

struct StringPath {
  std::vector<int> sites;
  std::vector<int> links;

  int length() const { return static_cast<int>(links.size()); }
  int source() const { return sites.front(); }
  int sink() const { return sites.back(); }
  bool operator==(const StringPath&) const = default;
};

enum class StringShape { l_shaped, diagonal, straight, s_shaped_hex };

inline std::string to_string(StringShape s) {
  switch (s) {
    case StringShape::l_shaped: return "l_shaped";
    case StringShape::diagonal: return "diagonal";
    case StringShape::straight: return "straight";
    case StringShape::s_shaped_hex: return "s_shaped_hex";
  }
  return "?";
}

class InvalidStringError : public std::invalid_argument {
 public:
  InvalidStringError(const std::string& what, std::vector<int> corners = {}, std::vector<int> endpoints = {})
      : std::invalid_argument(what), corners_(std::move(corners)), endpoints_(std::move(endpoints)) {}

  // Interior path sites where Gauss's law fails, in path order.
  const std::vector<int>& violating_corners() const { return corners_; }
  // Charge sites whose eigenvalue misses the layout.
  const std::vector<int>& violating_endpoints() const { return endpoints_; }
  std::optional<int> first_corner() const {
    return corners_.empty() ? std::nullopt : std::optional<int>(corners_.front());
  }

 private:
  std::vector<int> corners_;
  std::vector<int> endpoints_;
};

// Path from `start` following step letters R (+x), U (+y), L (-x), D (-y).
inline StringPath path_from_steps(const Lattice& lat, int start, std::string_view steps) {
  StringPath p;
  p.sites.push_back(start);
  int cur = start;
  for (char ch : steps) {
    const Coord c = lat.coord(cur);
    int dx = 0, dy = 0;
    switch (ch) {
      case 'R': dx = 1; break;
      case 'L': dx = -1; break;
      case 'U': dy = 1; break;
      case 'D': dy = -1; break;
      default: throw InvalidStringError(std::string("unknown step '") + ch + "'");
    }
    auto next = lat.site_at(c.x + dx, c.y + dy);
    if (!next) throw InvalidStringError("path leaves the lattice at step " + std::to_string(p.links.size() + 1));
    auto l = lat.link_between(cur, *next);
    if (!l) throw InvalidStringError("no link for step " + std::to_string(p.links.size() + 1));
    p.links.push_back(*l);
    p.sites.push_back(*next);
    cur = *next;
  }
  return p;
}

// Displacement from a to b in lattice steps; y is taken modulo L_y on a
// cylinder (always the +y arc).
inline Coord displacement(const Lattice& lat, int a, int b) {
  const Coord ca = lat.coord(a), cb = lat.coord(b);
  int dy = cb.y - ca.y;
  if (lat.periodic_y()) dy = ((dy % lat.extent_y()) + lat.extent_y()) % lat.extent_y();
  return {cb.x - ca.x, dy};
}

inline std::string shape_steps(const Lattice& lat, StringShape shape, int source, int sink) {
  const Coord d = displacement(lat, source, sink);
  if (d.x < 0 || d.y < 0) throw InvalidStringError("sink must lie in the +x/+y quadrant of the source");
  switch (shape) {
    case StringShape::l_shaped:
      return std::string(d.x, 'R') + std::string(d.y, 'U');
    case StringShape::diagonal: {
      std::string s;
      int rx = d.x, ry = d.y;
      while (rx > 0 || ry > 0) {
        if (rx > 0) s += 'R', --rx;
        if (ry > 0) s += 'U', --ry;
      }
      return s;
    }
    case StringShape::straight:
      if (d.x != 0 && d.y != 0) throw InvalidStringError("straight string needs aligned charges");
      return d.y == 0 ? std::string(d.x, 'R') : std::string(d.y, 'U');
    case StringShape::s_shaped_hex:
      if (d.y != 2) throw InvalidStringError("s-shaped string needs a y-displacement of 2");
      return "U" + std::string(d.x, 'R') + "U";
  }
  return {};
}

// Link configuration induced by a path: the U(1) vacuum (or the Z2 all-+1
// state) with every path link flipped.
inline BasisConfig induced_config(const Lattice& lat, const StringPath& path, GaugeModel model) {
  BasisConfig cfg = model == GaugeModel::u1_qlm ? vacuum_config(lat) : BasisConfig{};
  for (int l : path.links) cfg.flip(lat.link_bit(l));
  return cfg;
}

struct StringState {
  StringPath path;
  BasisConfig config;
};

inline StringState build_string_state(const Lattice& lat, const ChargeLayout& layout, const StringPath& path) {
  if (path.sites.size() != path.links.size() + 1 || path.sites.empty()) throw InvalidStringError("malformed path");
  for (std::size_t k = 0; k < path.links.size(); ++k) {
    const Link& l = lat.link(path.links[k]);
    const int a = path.sites[k], b = path.sites[k + 1];
    if (!((l.from == a && l.to == b) || (l.from == b && l.to == a)))
      throw InvalidStringError("path sites " + std::to_string(k) + " and " + std::to_string(k + 1) + " are not adjacent");
  }
  const auto src = layout.source();
  const auto snk = layout.sink();
  if (!src || !snk) throw InvalidStringError("layout must contain a -1 source and a +1 sink");
  if (path.source() != *src || path.sink() != *snk) throw InvalidStringError("path endpoints do not match the charges");

  const BasisConfig cfg = induced_config(lat, path, GaugeModel::u1_qlm);
  std::vector<int> corners, endpoints;
  for (std::size_t k = 0; k < path.sites.size(); ++k) {
    const int s = path.sites[k];
    if (gauss_eigenvalue_u1(lat, cfg, s) == layout.target(s)) continue;
    if (k == 0 || k + 1 == path.sites.size()) {
      endpoints.push_back(s);
    } else if (std::find(corners.begin(), corners.end(), s) == corners.end()) {
      corners.push_back(s);
    }
  }
  const int dist = lat.manhattan_distance(*src, *snk);
  if (!corners.empty() || !endpoints.empty()) {
    std::string msg = "string violates Gauss's law";
    if (!corners.empty()) msg += " at corner site " + std::to_string(corners.front());
    msg += " (" + std::to_string(corners.size()) + " corners, " + std::to_string(endpoints.size()) + " endpoints)";
    if (path.length() != dist) msg += "; length " + std::to_string(path.length()) + " exceeds minimal " + std::to_string(dist);
    throw InvalidStringError(msg, std::move(corners), std::move(endpoints));
  }
  if (path.length() != dist)
    throw InvalidStringError("string of length " + std::to_string(path.length()) + " is not minimal (" +
                             std::to_string(dist) + ")");
  // Anything else outside the path is vacuum; a final full check guards
  // against layouts with extra charges.
  if (!satisfies_gauss_u1(lat, cfg, layout)) throw InvalidStringError("layout has charges off the string");
  return {path, cfg};
}

inline StringState build_string_state(const Lattice& lat, const ChargeLayout& layout, std::string_view steps) {
  const auto src = layout.source();
  if (!src) throw InvalidStringError("layout has no source charge");
  return build_string_state(lat, layout, path_from_steps(lat, *src, steps));
}

inline StringState build_string_state(const Lattice& lat, const ChargeLayout& layout, StringShape shape) {
  const auto src = layout.source();
  const auto snk = layout.sink();
  if (!src || !snk) throw InvalidStringError("layout must contain a -1 source and a +1 sink");
  return build_string_state(lat, layout, shape_steps(lat, shape, *src, *snk));
}

// Recover the path of a U(1) string configuration by following raised links
// along their orientation from the source.
inline StringPath trace_u1_string(const Lattice& lat, const BasisConfig& cfg, int source, int sink) {
  StringPath p;
  p.sites.push_back(source);
  int cur = source;
  while (cur != sink) {
    int next_link = -1;
    for (int l : lat.incident_links(cur))
      if (lat.link(l).from == cur && link_bit(lat, cfg, l)) next_link = l;
    if (next_link < 0 || p.links.size() > static_cast<std::size_t>(lat.num_links()))
      throw InvalidStringError("configuration does not contain a string from source to sink");
    p.links.push_back(next_link);
    cur = lat.link(next_link).to;
    p.sites.push_back(cur);
  }
  return p;
}

// All shortest link paths between two sites, in lexicographic order of link
// sequences.
inline std::vector<StringPath> shortest_paths(const Lattice& lat, int a, int b) {
  std::vector<int> dist_to_b(lat.num_sites(), -1);
  std::deque<int> q{b};
  dist_to_b[b] = 0;
  while (!q.empty()) {
    const int s = q.front();
    q.pop_front();
    for (int l : lat.incident_links(s)) {
      const int t = lat.link(l).from == s ? lat.link(l).to : lat.link(l).from;
      if (dist_to_b[t] < 0) dist_to_b[t] = dist_to_b[s] + 1, q.push_back(t);
    }
  }
  std::vector<StringPath> out;
  if (dist_to_b[a] < 0) return out;
  StringPath cur;
  cur.sites.push_back(a);
  auto rec = [&](auto&& self, int s) -> void {
    if (s == b) {
      out.push_back(cur);
      return;
    }
    std::vector<int> ls = lat.incident_links(s);
    std::sort(ls.begin(), ls.end());
    for (int l : ls) {
      const int t = lat.link(l).from == s ? lat.link(l).to : lat.link(l).from;
      if (dist_to_b[t] != dist_to_b[s] - 1) continue;
      cur.sites.push_back(t);
      cur.links.push_back(l);
      self(self, t);
      cur.sites.pop_back();
      cur.links.pop_back();
    }
  };
  rec(rec, a);
  return out;
}

struct StringSet {
  std::vector<StringPath> paths;
  std::vector<BasisConfig> configs;
  std::size_t seed_index = 0;

  std::size_t size() const { return paths.size(); }
};

inline bool plaquette_in_patch(const Lattice& lat, int p, const std::vector<bool>& patch) {
  for (const auto& e : lat.plaquette(p)) {
    const Link& l = lat.link(e.link);
    if (!patch[l.from] || !patch[l.to]) return false;
  }
  return true;
}

// Closure of the seed under single flippable-plaquette moves inside the
// rectangle spanned by the two charges. Output is sorted by configuration.
inline StringSet enumerate_minimal_strings(const Lattice& lat, const ChargeLayout& layout, const StringPath& seed) {
  const StringState s0 = build_string_state(lat, layout, seed);
  const int src = seed.source(), snk = seed.sink();
  const auto patch = rectangle_patch(lat, src, snk);
  std::vector<int> local;
  for (int p = 0; p < lat.num_plaquettes(); ++p)
    if (plaquette_in_patch(lat, p, patch)) local.push_back(p);

  std::unordered_set<BasisConfig, BasisConfigHash> seen{s0.config};
  std::deque<BasisConfig> queue{s0.config};
  std::vector<BasisConfig> found{s0.config};
  while (!queue.empty()) {
    const BasisConfig cfg = queue.front();
    queue.pop_front();
    for (int p : local) {
      if (plaquette_orientation(lat, cfg, p) == 0) continue;
      BasisConfig next = flip_plaquette(lat, cfg, p);
      if (seen.insert(next).second) {
        queue.push_back(next);
        found.push_back(next);
      }
    }
  }
  std::sort(found.begin(), found.end());
  StringSet out;
  for (const auto& cfg : found) {
    if (cfg == s0.config) out.seed_index = out.configs.size();
    out.configs.push_back(cfg);
    out.paths.push_back(trace_u1_string(lat, cfg, src, snk));
  }
  return out;
}

// ------------------------------------------------------ exact energies -----

using Rational = boost::rational<std::int64_t>;

// Best rational approximation with denominator <= max_den (continued
// fractions). Couplings entered as decimals map to their exact fractions.
inline Rational to_rational(double v, std::int64_t max_den = 1'000'000) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite coupling");
  const bool neg = v < 0;
  double x = std::abs(v);
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int it = 0; it < 64; ++it) {
    const double a_d = std::floor(x);
    if (a_d > 4e15) break;
    const auto a = static_cast<std::int64_t>(a_d);
    const std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1, q0 = q1, p1 = p2, q1 = q2;
    const double frac = x - a_d;
    if (frac < 1e-15 || std::abs(static_cast<double>(p1) / static_cast<double>(q1) - std::abs(v)) <= 1e-15 * std::abs(v))
      break;
    x = 1.0 / frac;
  }
  if (q1 == 0) throw std::invalid_argument("coupling too large for exact arithmetic");
  return Rational(neg ? -p1 : p1, q1);
}

// Exact test of m * d_mass + (g / 2) * d_field == 0.
inline bool u1_same_energy(const U1DiagonalCounts& a, const U1DiagonalCounts& b, const Rational& m, const Rational& g) {
  const Rational diff = m * Rational(a.mass_count - b.mass_count) + g * Rational(a.field_count - b.field_count, 2);
  return diff == Rational(0);
}

// ------------------------------------------------- fixed-energy manifold ---

// A contiguous run of lowered string links. Its end sites carry the created
// particle (s = +1 site, now occupied) and hole (s = -1 site, now empty).
struct BreakSegment {
  std::vector<int> links;
  int particle = -1;
  int hole = -1;
};

struct BreakPattern {
  int string_id = 0;
  std::vector<BreakSegment> segments;

  std::size_t num_broken_links() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.links.size();
    return n;
  }
};

inline BreakPattern break_pattern(const Lattice& lat, const StringPath& path, int string_id, const BasisConfig& cfg) {
  BreakPattern bp;
  bp.string_id = string_id;
  auto classify = [&](BreakSegment& seg, int site) {
    const bool occ = matter_bit(cfg, site);
    if (lat.mass_sign(site) > 0 && occ) seg.particle = site;
    if (lat.mass_sign(site) < 0 && !occ) seg.hole = site;
  };
  for (std::size_t k = 0; k < path.links.size();) {
    if (link_bit(lat, cfg, path.links[k])) {
      ++k;
      continue;
    }
    BreakSegment seg;
    const std::size_t first = k;
    while (k < path.links.size() && !link_bit(lat, cfg, path.links[k])) seg.links.push_back(path.links[k++]);
    classify(seg, path.sites[first]);
    classify(seg, path.sites[k]);
    bp.segments.push_back(std::move(seg));
  }
  return bp;
}

struct ManifoldState {
  BasisConfig config;
  int string_id = 0;
  std::vector<int> broken_links;  // string links lowered relative to the string
  BreakPattern pattern;
};

struct MinimalModelBasis {
  const Lattice* lattice = nullptr;
  ChargeLayout layout;
  StringSet strings;
  std::vector<ManifoldState> states;
  std::size_t label_count = 0;  // labels before merging identical configurations
  U1DiagonalCounts reference;   // shared diagonal energy counts
  double reference_energy = 0.0;
  bool off_resonant = false;    // no energy-conserving break exists
  std::vector<bool> patch;

  std::size_t dimension() const { return states.size(); }

  std::optional<std::size_t> find(const BasisConfig& cfg) const {
    auto it = index_.find(cfg);
    return it == index_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  }

  // Manifold indices of the unbroken string configurations, by string id.
  std::vector<std::size_t> string_indices() const {
    std::vector<std::size_t> out;
    for (const auto& cfg : strings.configs) out.push_back(*find(cfg));
    return out;
  }

  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < states.size(); ++i) index_.emplace(states[i].config, i);
  }

 private:
  std::unordered_map<BasisConfig, std::size_t, BasisConfigHash> index_;
};

// Breadth-first closure of every string under single hops across its own
// links, keeping only configurations with exactly the string energy.
inline MinimalModelBasis enumerate_resonant_manifold(const Lattice& lat, const ChargeLayout& layout,
                                                     const StringSet& strings, const Couplings& c) {
  if (strings.size() == 0) throw std::invalid_argument("no strings given");
  MinimalModelBasis mb;
  mb.lattice = &lat;
  mb.layout = layout;
  mb.strings = strings;
  mb.reference = u1_diagonal_counts(lat, strings.configs.front());
  mb.reference_energy = u1_diagonal_energy(lat, strings.configs.front(), c);
  mb.patch = rectangle_patch(lat, strings.paths.front().source(), strings.paths.front().sink());
  const Rational m = to_rational(c.mass);
  const Rational g = to_rational(c.efield);

  std::unordered_set<BasisConfig, BasisConfigHash> merged;
  bool any_break = false;
  for (std::size_t id = 0; id < strings.size(); ++id) {
    const BasisConfig& root = strings.configs[id];
    const StringPath& path = strings.paths[id];
    if (!(u1_diagonal_counts(lat, root) == mb.reference) &&
        !u1_same_energy(u1_diagonal_counts(lat, root), mb.reference, m, g))
      throw std::logic_error("strings of one closure differ in energy");

    std::unordered_set<BasisConfig, BasisConfigHash> seen{root};
    std::deque<BasisConfig> queue{root};
    std::vector<BasisConfig> found{root};
    while (!queue.empty()) {
      const BasisConfig cfg = queue.front();
      queue.pop_front();
      BasisConfig partner;
      for (int l : path.links) {
        if (!u1_hop(lat, cfg, l, partner)) continue;
        if (!u1_same_energy(u1_diagonal_counts(lat, partner), mb.reference, m, g)) continue;
        if (seen.insert(partner).second) {
          queue.push_back(partner);
          found.push_back(partner);
        }
      }
    }
    std::sort(found.begin() + 1, found.end());
    if (found.size() > 1) any_break = true;
    for (const auto& cfg : found) {
      ++mb.label_count;
      if (!merged.insert(cfg).second) continue;
      ManifoldState st;
      st.config = cfg;
      st.string_id = static_cast<int>(id);
      for (int l : path.links)
        if (!link_bit(lat, cfg, l)) st.broken_links.push_back(l);
      st.pattern = break_pattern(lat, path, static_cast<int>(id), cfg);
      mb.states.push_back(std::move(st));
    }
  }
  mb.off_resonant = !any_break;
  mb.rebuild_index();
  return mb;
}

class DimensionCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMinimalCap = 20000;

// H restricted to the manifold with the common diagonal subtracted. Matrix
// elements come from hops and plaquette flips inside the charge patch; every
// other term of H leaves the manifold.
inline DenseOperator build_minimal_model(const MinimalModelBasis& mb, const Couplings& c,
                                         std::size_t cap = kDefaultMinimalCap) {
  if (mb.lattice == nullptr) throw std::invalid_argument("manifold has no lattice");
  if (mb.dimension() > cap)
    throw DimensionCapError("minimal model dimension " + std::to_string(mb.dimension()) + " exceeds cap " +
                            std::to_string(cap));
  const Lattice& lat = *mb.lattice;
  std::vector<int> links, plaqs;
  for (int l = 0; l < lat.num_links(); ++l)
    if (mb.patch[lat.link(l).from] && mb.patch[lat.link(l).to]) links.push_back(l);
  for (int p = 0; p < lat.num_plaquettes(); ++p)
    if (plaquette_in_patch(lat, p, mb.patch)) plaqs.push_back(p);

  const auto n = static_cast<Eigen::Index>(mb.dimension());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const BasisConfig& cfg = mb.states[i].config;
    h(i, i) = u1_diagonal_energy(lat, cfg, c) - mb.reference_energy;
    BasisConfig partner;
    if (c.kappa != 0.0) {
      for (int l : links) {
        if (!u1_hop(lat, cfg, l, partner)) continue;
        if (auto j = mb.find(partner)) h(i, static_cast<Eigen::Index>(*j)) += -c.kappa * lat.hop_sign(l);
      }
    }
    if (c.plaq != 0.0) {
      for (int p : plaqs) {
        if (plaquette_orientation(lat, cfg, p) == 0) continue;
        if (auto j = mb.find(flip_plaquette(lat, cfg, p))) h(i, static_cast<Eigen::Index>(*j)) += -c.plaq;
      }
    }
  }
  return DenseOperator(std::move(h));
}

// Manifold text export:
//   # lgt-manifold v1 lattice=<geometry>_<Lx>x<Ly>_<boundary> sites=N links=M strings=S labels=K dimension=D
//   <index> <string_id> <packed config, hex> <broken links, comma separated or ->
inline void export_manifold(std::ostream& os, const MinimalModelBasis& mb) {
  const Lattice& lat = *mb.lattice;
  os << "# lgt-manifold v1 lattice=" << to_string(lat.geometry()) << '_' << lat.extent_x() << 'x' << lat.extent_y()
     << '_' << to_string(lat.spec().boundary) << " sites=" << lat.num_sites() << " links=" << lat.num_links()
     << " strings=" << mb.strings.size() << " labels=" << mb.label_count << " dimension=" << mb.dimension() << '\n';
  for (std::size_t i = 0; i < mb.states.size(); ++i) {
    const auto& st = mb.states[i];
    os << i << ' ' << st.string_id << ' ' << st.config.to_hex(lat.num_bits()) << ' ';
    if (st.broken_links.empty()) {
      os << '-';
    } else {
      for (std::size_t k = 0; k < st.broken_links.size(); ++k) os << (k ? "," : "") << st.broken_links[k];
    }
    os << '\n';
  }
}

}  // namespace lgt
