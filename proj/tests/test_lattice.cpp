#include <gtest/gtest.h>

#include <deque>
#include <set>

#include "lgt/lattice.hpp"

using namespace lgt;

namespace {

// Counting over the coordinate grid, independent of the link tables.
struct GridCounts {
  int sites, x_links, y_links, plaquettes;
};

GridCounts square_counts(int lx, int ly, bool cyl) {
  const int y_rows = cyl ? ly : ly - 1;
  return {lx * ly, (lx - 1) * ly, lx * y_rows, (lx - 1) * y_rows};
}

}  // namespace

TEST(Lattice, SquareCylinderCounts) {
  const Lattice lat = build_lattice({Geometry::square, 7, 6, Boundary::cylinder_periodic_y});
  const auto c = square_counts(7, 6, true);
  EXPECT_EQ(lat.num_sites(), 42);
  EXPECT_EQ(lat.num_links(), 78);
  EXPECT_EQ(lat.num_plaquettes(), 36);
  EXPECT_EQ(c.x_links, 36);
  EXPECT_EQ(c.y_links, 42);
  int nx = 0, ny = 0;
  for (const auto& l : lat.links()) (l.dir == Direction::x ? nx : ny)++;
  EXPECT_EQ(nx, c.x_links);
  EXPECT_EQ(ny, c.y_links);
}

TEST(Lattice, SquareOpenCountsMatchGridOracle) {
  for (int lx = 2; lx <= 6; ++lx)
    for (int ly = 2; ly <= 5; ++ly) {
      const Lattice lat = build_lattice({Geometry::square, lx, ly, Boundary::open});
      const auto c = square_counts(lx, ly, false);
      EXPECT_EQ(lat.num_sites(), c.sites);
      EXPECT_EQ(lat.num_links(), c.x_links + c.y_links);
      EXPECT_EQ(lat.num_plaquettes(), c.plaquettes);
    }
}

TEST(Lattice, TwoByTwoOpen) {
  const Lattice lat = build_lattice({Geometry::square, 2, 2, Boundary::open});
  EXPECT_EQ(lat.num_sites(), 4);
  EXPECT_EQ(lat.num_links(), 4);
  EXPECT_EQ(lat.num_plaquettes(), 1);
}

TEST(Lattice, SingleHexagon) {
  const Lattice lat = build_lattice({Geometry::hexagonal, 3, 2, Boundary::open});
  EXPECT_EQ(lat.num_sites(), 6);
  EXPECT_EQ(lat.num_links(), 6);
  EXPECT_EQ(lat.num_plaquettes(), 1);
}

TEST(Lattice, HexagonalSitesHaveThreeNeighboursOnCylinder) {
  const Lattice lat = build_lattice({Geometry::hexagonal, 8, 6, Boundary::cylinder_periodic_y});
  for (int s = 0; s < lat.num_sites(); ++s) {
    const Coord c = lat.coord(s);
    if (c.x == 0 || c.x == 7) continue;
    EXPECT_EQ(lat.incident_links(s).size(), 3u) << "site " << s;
  }
  for (int p = 0; p < lat.num_plaquettes(); ++p) EXPECT_EQ(lat.plaquette(p).size, 6);
}

TEST(Lattice, RowMajorIndexingXLinksFirst) {
  const Lattice lat = build_lattice({Geometry::square, 3, 3, Boundary::open});
  EXPECT_EQ(lat.site(2, 1), 5);
  EXPECT_EQ(lat.coord(7).x, 1);
  EXPECT_EQ(lat.coord(7).y, 2);
  EXPECT_EQ(lat.link(0).dir, Direction::x);
  EXPECT_EQ(lat.link(1).dir, Direction::y);
  EXPECT_EQ(lat.link(0).from, 0);
  EXPECT_EQ(lat.link(1).to, 3);
}

TEST(Lattice, Staggering) {
  const Lattice lat = build_lattice({Geometry::square, 4, 4, Boundary::open});
  EXPECT_EQ(lat.mass_sign(lat.site(0, 0)), 1);
  EXPECT_EQ(lat.mass_sign(lat.site(1, 0)), -1);
  EXPECT_EQ(lat.hop_sign(*lat.y_link(lat.site(1, 0))), -1);
  EXPECT_EQ(lat.hop_sign(*lat.y_link(lat.site(2, 1))), 1);
  EXPECT_EQ(lat.hop_sign(*lat.x_link(lat.site(1, 0))), 1);
}

TEST(Lattice, BipartiteAcrossEveryLink) {
  for (const LatticeSpec spec : {LatticeSpec{Geometry::square, 7, 6, Boundary::cylinder_periodic_y},
                                 LatticeSpec{Geometry::square, 5, 3, Boundary::open},
                                 LatticeSpec{Geometry::hexagonal, 7, 6, Boundary::cylinder_periodic_y},
                                 LatticeSpec{Geometry::hexagonal, 5, 4, Boundary::open}}) {
    const Lattice lat = build_lattice(spec);
    for (const auto& l : lat.links()) EXPECT_EQ(lat.mass_sign(l.from) * lat.mass_sign(l.to), -1);
  }
}

TEST(Lattice, ManhattanDistance) {
  const Lattice sq = build_lattice({Geometry::square, 6, 5, Boundary::open});
  EXPECT_EQ(sq.manhattan_distance(sq.site(0, 0), sq.site(4, 3)), 7);
  EXPECT_EQ(sq.manhattan_distance(sq.site(4, 3), sq.site(0, 0)), 7);
  EXPECT_EQ(sq.manhattan_distance(sq.site(0, 0), sq.site(0, 0)), 0);
  const Lattice hex = build_lattice({Geometry::hexagonal, 5, 4, Boundary::open});
  const auto& l = hex.link(0);
  EXPECT_NE(hex.mass_sign(l.from), hex.mass_sign(l.to));
  EXPECT_EQ(hex.manhattan_distance(l.from, l.to), 1);
}

TEST(Lattice, CylinderWrapsAndIsConnected) {
  const Lattice lat = build_lattice({Geometry::square, 7, 6, Boundary::cylinder_periodic_y});
  for (int s = 0; s < lat.num_sites(); ++s) EXPECT_TRUE(lat.y_link(s).has_value());
  EXPECT_EQ(lat.manhattan_distance(lat.site(0, 0), lat.site(0, 5)), 1);
  std::vector<bool> seen(lat.num_sites(), false);
  std::deque<int> q{0};
  seen[0] = true;
  while (!q.empty()) {
    const int s = q.front();
    q.pop_front();
    for (int l : lat.incident_links(s)) {
      const int t = lat.link(l).from == s ? lat.link(l).to : lat.link(l).from;
      if (!seen[t]) seen[t] = true, q.push_back(t);
    }
  }
  EXPECT_EQ(std::count(seen.begin(), seen.end(), true), lat.num_sites());
}

TEST(Lattice, SquarePlaquetteSigns) {
  const Lattice lat = build_lattice({Geometry::square, 3, 3, Boundary::open});
  const auto cyc = lat.plaquette_cycle(0);
  ASSERT_EQ(cyc.size(), 4u);
  const int expect[] = {1, 1, -1, -1};
  for (int k = 0; k < 4; ++k) EXPECT_EQ(cyc[k].sign, expect[k]);
  EXPECT_EQ(cyc[0].link, *lat.x_link(lat.site(0, 0)));
  EXPECT_EQ(cyc[1].link, *lat.y_link(lat.site(1, 0)));
  EXPECT_EQ(cyc[2].link, *lat.x_link(lat.site(0, 1)));
  EXPECT_EQ(cyc[3].link, *lat.y_link(lat.site(0, 0)));
}

TEST(Lattice, HexPlaquetteSigns) {
  const Lattice lat = build_lattice({Geometry::hexagonal, 3, 2, Boundary::open});
  const auto cyc = lat.plaquette_cycle(0);
  ASSERT_EQ(cyc.size(), 6u);
  const int expect[] = {1, 1, 1, -1, -1, -1};
  for (int k = 0; k < 6; ++k) EXPECT_EQ(cyc[k].sign, expect[k]);
}

// Traversing each cycle entry forward for +1 and backward for -1 returns to
// the start and visits distinct links.
TEST(Lattice, PlaquettesAreClosedSimpleCycles) {
  for (const LatticeSpec spec : {LatticeSpec{Geometry::square, 7, 6, Boundary::cylinder_periodic_y},
                                 LatticeSpec{Geometry::hexagonal, 7, 6, Boundary::cylinder_periodic_y},
                                 LatticeSpec{Geometry::hexagonal, 6, 5, Boundary::open}}) {
    const Lattice lat = build_lattice(spec);
    for (int p = 0; p < lat.num_plaquettes(); ++p) {
      const auto cyc = lat.plaquette_cycle(p);
      std::set<int> distinct;
      int cur = lat.plaquette(p).anchor;
      const int start = cur;
      for (const auto& e : cyc) {
        distinct.insert(e.link);
        const Link& l = lat.link(e.link);
        const int from = e.sign > 0 ? l.from : l.to;
        const int to = e.sign > 0 ? l.to : l.from;
        ASSERT_EQ(from, cur) << "plaquette " << p;
        cur = to;
      }
      EXPECT_EQ(cur, start);
      EXPECT_EQ(distinct.size(), cyc.size());
    }
  }
}

TEST(Lattice, PlaquetteIncidenceCount) {
  const Lattice lat = build_lattice({Geometry::square, 5, 4, Boundary::open});
  // Interior links border two plaquettes, boundary links one.
  int incidences = 0;
  for (int p = 0; p < lat.num_plaquettes(); ++p) incidences += lat.plaquette(p).size;
  int expected = 0;
  for (int l = 0; l < lat.num_links(); ++l) {
    const Coord a = lat.coord(lat.link(l).from);
    const bool boundary = lat.link(l).dir == Direction::x ? (a.y == 0 || a.y == 3) : (a.x == 0 || a.x == 4);
    expected += boundary ? 1 : 2;
    EXPECT_EQ(static_cast<int>(lat.plaquettes_of_link(l).size()), boundary ? 1 : 2);
  }
  EXPECT_EQ(incidences, expected);
}

TEST(Lattice, RejectsBadSpecs) {
  EXPECT_THROW(build_lattice({Geometry::square, 1, 4, Boundary::open}), LatticeError);
  EXPECT_THROW(build_lattice({Geometry::square, 4, 3, Boundary::cylinder_periodic_y}), LatticeError);
  EXPECT_THROW(build_lattice({Geometry::hexagonal, 2, 4, Boundary::open}), LatticeError);
  EXPECT_THROW(build_lattice({Geometry::chain, 4, 2, Boundary::open}), LatticeError);
  EXPECT_NO_THROW(make_chain(8, 1));
}

TEST(Lattice, RectanglePatchWrapsOnCylinder) {
  const Lattice lat = build_lattice({Geometry::square, 7, 6, Boundary::cylinder_periodic_y});
  const auto patch = rectangle_patch(lat, lat.site(1, 2), lat.site(5, 5));
  EXPECT_EQ(std::count(patch.begin(), patch.end(), true), 20);
  const auto wrap = rectangle_patch(lat, lat.site(1, 4), lat.site(2, 1));
  EXPECT_EQ(std::count(wrap.begin(), wrap.end(), true), 8);
  EXPECT_TRUE(wrap[lat.site(1, 0)]);
}
