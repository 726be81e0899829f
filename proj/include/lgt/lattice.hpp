#pragma once

// Square and brick-wall (hexagonal) lattice geometries, plus the open chain
// used as the 1+1D reference.
//
// Sites are indexed row-major: index = y * extent_x + x. Links are emitted per
// site in index order, the +x link first and then the +y link. Every link is
// oriented along +e_x or +e_y; across the periodic seam of a cylinder the
// link still points along +e_y, from (x, L_y - 1) to (x, 0).
//
// The hexagonal lattice is embedded as a brick wall: all horizontal links are
// present, the vertical link (x, y) -> (x, y + 1) exists only when x + y is
// even. A hexagon is anchored at its lower-left site (x, y) with x + y even and
// its six labels follow the counter-clockwise traversal
//
//        5       4
//   (x,y+1)---(x+1,y+1)---(x+2,y+1)
//      |                      |
//    6 |                      | 3
//      |                      |
//   (x,y)-----(x+1,y)-----(x+2,y)
//        1       2
//
// Links 1, 2, 3 are traversed along their orientation (raising factors),
// links 4, 5, 6 against it (lowering factors). The square plaquette uses the
// same rule with links (j,x), (j+x,y), (j+y,x), (j,y).

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lgt {

enum class Geometry { square, hexagonal, chain };
enum class Boundary { cylinder_periodic_y, open };

inline std::string to_string(Geometry g) {
  switch (g) {
    case Geometry::square: return "square";
    case Geometry::hexagonal: return "hexagonal";
    case Geometry::chain: return "chain";
  }
  return "?";
}

inline std::string to_string(Boundary b) {
  return b == Boundary::open ? "open" : "cylinder_periodic_y";
}

struct LatticeSpec {
  Geometry geometry = Geometry::square;
  int extent_x = 2;
  int extent_y = 2;
  Boundary boundary = Boundary::open;
  // Chain only: parity of site 0 (0 -> even, 1 -> odd).
  int parity_offset = 0;

  bool operator==(const LatticeSpec&) const = default;
};

class LatticeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Coord {
  int x = 0;
  int y = 0;
  bool operator==(const Coord&) const = default;
};

enum class Direction : std::uint8_t { x, y };

struct Link {
  int from = 0;
  int to = 0;
  Direction dir = Direction::x;
  int hop_sign = 1;
};

struct CycleEntry {
  int link = 0;
  int sign = 1;  // +1 raising (U), -1 lowering (U^dagger)
};

struct Plaquette {
  int anchor = 0;
  int size = 0;
  std::array<CycleEntry, 6> cycle{};

  const CycleEntry* begin() const { return cycle.data(); }
  const CycleEntry* end() const { return cycle.data() + size; }
};

class Lattice;
inline Lattice build_lattice(const LatticeSpec& spec);

class Lattice {
 public:
  const LatticeSpec& spec() const { return spec_; }
  Geometry geometry() const { return spec_.geometry; }
  int extent_x() const { return spec_.extent_x; }
  int extent_y() const { return spec_.extent_y; }
  bool periodic_y() const { return spec_.boundary == Boundary::cylinder_periodic_y; }

  int num_sites() const { return static_cast<int>(coords_.size()); }
  int num_links() const { return static_cast<int>(links_.size()); }
  int num_plaquettes() const { return static_cast<int>(plaquettes_.size()); }
  int num_bits() const { return num_sites() + num_links(); }

  const Coord& coord(int site) const { return coords_.at(site); }
  const Link& link(int l) const { return links_.at(l); }
  const std::vector<Link>& links() const { return links_; }
  const Plaquette& plaquette(int p) const { return plaquettes_.at(p); }
  const std::vector<Plaquette>& plaquettes() const { return plaquettes_; }
  const std::vector<int>& incident_links(int site) const { return incident_.at(site); }
  const std::vector<int>& plaquettes_of_link(int l) const { return link_plaquettes_.at(l); }

  // Bit position of a link inside a packed configuration.
  int link_bit(int l) const { return num_sites() + l; }

  std::optional<int> site_at(int x, int y) const {
    if (periodic_y()) y = ((y % extent_y()) + extent_y()) % extent_y();
    if (x < 0 || x >= extent_x() || y < 0 || y >= extent_y()) return std::nullopt;
    return y * extent_x() + x;
  }
  int site(int x, int y) const {
    auto s = site_at(x, y);
    if (!s) throw LatticeError("site (" + std::to_string(x) + "," + std::to_string(y) + ") not on lattice");
    return *s;
  }

  // Staggering s_j: (-1)^{x+y} on square and chain, A/B sublattice sign on the
  // brick wall (sites carrying an up-link are the s = -1 sublattice).
  int mass_sign(int site) const { return mass_sign_.at(site); }
  int parity(int site) const { return mass_sign(site); }
  int hop_sign(int l) const { return link(l).hop_sign; }

  // Link connecting two sites, if any.
  std::optional<int> link_between(int a, int b) const {
    for (int l : incident_.at(a)) {
      const Link& k = links_[l];
      if ((k.from == a && k.to == b) || (k.from == b && k.to == a)) return l;
    }
    return std::nullopt;
  }

  std::optional<int> x_link(int site) const {
    return x_link_.at(site) < 0 ? std::nullopt : std::optional<int>(x_link_[site]);
  }
  std::optional<int> y_link(int site) const {
    return y_link_.at(site) < 0 ? std::nullopt : std::optional<int>(y_link_[site]);
  }

  // Shortest path length in links between two sites (breadth-first search).
  int manhattan_distance(int a, int b) const {
    if (a == b) return 0;
    std::vector<int> dist(num_sites(), -1);
    std::deque<int> queue{a};
    dist[a] = 0;
    while (!queue.empty()) {
      const int s = queue.front();
      queue.pop_front();
      for (int l : incident_[s]) {
        const int t = links_[l].from == s ? links_[l].to : links_[l].from;
        if (dist[t] >= 0) continue;
        dist[t] = dist[s] + 1;
        if (t == b) return dist[t];
        queue.push_back(t);
      }
    }
    return -1;
  }

  // Ordered (link, orientation sign) list of a plaquette.
  std::vector<CycleEntry> plaquette_cycle(int p) const {
    const Plaquette& pl = plaquette(p);
    return {pl.begin(), pl.end()};
  }

  std::string describe() const {
    return to_string(geometry()) + " " + std::to_string(extent_x()) + "x" + std::to_string(extent_y()) + " " +
           to_string(spec_.boundary);
  }

  friend Lattice build_lattice(const LatticeSpec& spec);

 private:
  void add_link(int from, int to, Direction dir, int hop_sign) {
    const int id = num_links();
    links_.push_back({from, to, dir, hop_sign});
    incident_[from].push_back(id);
    incident_[to].push_back(id);
    (dir == Direction::x ? x_link_ : y_link_)[from] = id;
  }

  void add_plaquette(int anchor, std::initializer_list<CycleEntry> entries) {
    Plaquette p;
    p.anchor = anchor;
    for (const auto& e : entries) p.cycle[p.size++] = e;
    const int id = num_plaquettes();
    for (const auto& e : p) link_plaquettes_[e.link].push_back(id);
    plaquettes_.push_back(p);
  }

  LatticeSpec spec_;
  std::vector<Coord> coords_;
  std::vector<int> mass_sign_;
  std::vector<Link> links_;
  std::vector<std::vector<int>> incident_;
  std::vector<int> x_link_;
  std::vector<int> y_link_;
  std::vector<Plaquette> plaquettes_;
  std::vector<std::vector<int>> link_plaquettes_;
};

inline bool brick_has_up_link(int x, int y) { return ((x + y) & 1) == 0; }

inline Lattice build_lattice(const LatticeSpec& spec) {
  const int lx = spec.extent_x;
  const int ly = spec.extent_y;
  const bool cyl = spec.boundary == Boundary::cylinder_periodic_y;

  if (spec.geometry == Geometry::chain) {
    if (lx < 2) throw LatticeError("chain needs at least 2 sites");
    if (ly != 1) throw LatticeError("chain must have extent_y = 1");
    if (cyl) throw LatticeError("chain is always open");
  } else {
    if (lx < 2 || ly < 2) throw LatticeError("extent_x and extent_y must be >= 2");
    if (cyl && (ly < 4 || ly % 2 != 0))
      throw LatticeError("cylinder needs an even extent_y >= 4 to keep the lattice bipartite");
    if (spec.geometry == Geometry::hexagonal && lx < 3)
      throw LatticeError("hexagonal unit cell does not tile: extent_x must be >= 3");
  }

  Lattice lat;
  lat.spec_ = spec;
  const int n = lx * ly;
  lat.coords_.resize(n);
  lat.mass_sign_.resize(n);
  lat.incident_.resize(n);
  lat.x_link_.assign(n, -1);
  lat.y_link_.assign(n, -1);
  for (int y = 0; y < ly; ++y) {
    for (int x = 0; x < lx; ++x) {
      const int s = y * lx + x;
      lat.coords_[s] = {x, y};
      const int par = ((x + y + (spec.geometry == Geometry::chain ? spec.parity_offset : 0)) & 1) ? -1 : 1;
      lat.mass_sign_[s] = spec.geometry == Geometry::hexagonal ? -par : par;
    }
  }

  auto up_allowed = [&](int x, int y) {
    if (spec.geometry == Geometry::chain) return false;
    if (spec.geometry == Geometry::hexagonal && !brick_has_up_link(x, y)) return false;
    return cyl || y + 1 < ly;
  };

  for (int y = 0; y < ly; ++y) {
    for (int x = 0; x < lx; ++x) {
      const int s = y * lx + x;
      if (x + 1 < lx) lat.add_link(s, s + 1, Direction::x, 1);
      if (up_allowed(x, y)) {
        const int t = ((y + 1) % ly) * lx + x;
        const int sign = spec.geometry == Geometry::square ? ((x & 1) ? -1 : 1) : 1;
        lat.add_link(s, t, Direction::y, sign);
      }
    }
  }

  lat.link_plaquettes_.resize(lat.num_links());
  for (int y = 0; y < ly; ++y) {
    for (int x = 0; x < lx; ++x) {
      const int s = y * lx + x;
      if (spec.geometry == Geometry::square) {
        if (x + 1 >= lx || !up_allowed(x, y)) continue;
        const int right = s + 1;
        const int up = *lat.site_at(x, y + 1);
        lat.add_plaquette(s, {{lat.x_link_[s], +1},
                              {lat.y_link_[right], +1},
                              {lat.x_link_[up], -1},
                              {lat.y_link_[s], -1}});
      } else if (spec.geometry == Geometry::hexagonal) {
        if (x + 2 >= lx || !brick_has_up_link(x, y) || !up_allowed(x, y)) continue;
        const int r1 = s + 1;
        const int r2 = s + 2;
        const int up = *lat.site_at(x, y + 1);
        const int up1 = up + 1;
        lat.add_plaquette(s, {{lat.x_link_[s], +1},
                              {lat.x_link_[r1], +1},
                              {lat.y_link_[r2], +1},
                              {lat.x_link_[up1], -1},
                              {lat.x_link_[up], -1},
                              {lat.y_link_[s], -1}});
      }
    }
  }
  return lat;
}

inline Lattice make_chain(int length, int parity_offset = 0) {
  return build_lattice({Geometry::chain, length, 1, Boundary::open, parity_offset});
}

// Sites of the rectangle spanned from `a` in the +x/+y directions to `b`
// (y wraps on a cylinder). Used as the minimal patch containing two charges.
inline std::vector<bool> rectangle_patch(const Lattice& lat, int a, int b) {
  const Coord ca = lat.coord(a);
  const Coord cb = lat.coord(b);
  const int x0 = std::min(ca.x, cb.x);
  const int x1 = std::max(ca.x, cb.x);
  int dy;
  int y0;
  if (lat.periodic_y()) {
    y0 = ca.y;
    dy = ((cb.y - ca.y) % lat.extent_y() + lat.extent_y()) % lat.extent_y();
  } else {
    y0 = std::min(ca.y, cb.y);
    dy = std::abs(cb.y - ca.y);
  }
  std::vector<bool> in(lat.num_sites(), false);
  for (int k = 0; k <= dy; ++k)
    for (int x = x0; x <= x1; ++x) in[lat.site(x, y0 + k)] = true;
  return in;
}

}  // namespace lgt
