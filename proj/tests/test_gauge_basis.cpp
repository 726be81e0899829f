#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lgt/gauge_basis.hpp"
#include "oracles.hpp"

using namespace lgt;

namespace {

std::uint64_t pack(const Lattice& lat, const BasisConfig& cfg) {
  std::uint64_t v = 0;
  for (int b = 0; b < lat.num_bits(); ++b)
    if (cfg.test(b)) v |= std::uint64_t{1} << b;
  return v;
}

BasisConfig unpack(std::uint64_t v) {
  BasisConfig c;
  for (int b = 0; b < 64; ++b) c.set(b, (v >> b) & 1u);
  return c;
}

std::vector<std::uint64_t> packed(const Lattice& lat, const SectorBasis& b) {
  std::vector<std::uint64_t> out;
  for (const auto& c : b) out.push_back(pack(lat, c));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(BitConfig, RoundTripAndOrdering) {
  BasisConfig a;
  a.set(3);
  a.set(200);
  EXPECT_TRUE(a.test(3));
  EXPECT_TRUE(a.test(200));
  EXPECT_FALSE(a.test(4));
  EXPECT_EQ(a.popcount(), 2);
  BasisConfig b;
  b.set(199);
  EXPECT_LT(b, a);
  a.flip(200);
  EXPECT_LT(a, b);
  EXPECT_EQ(unpack(pack(build_lattice({Geometry::square, 3, 3, Boundary::open}), a)), a);
}

TEST(Gauss, VacuumIsNeutralEverywhere) {
  for (const LatticeSpec spec : {LatticeSpec{Geometry::square, 7, 6, Boundary::cylinder_periodic_y},
                                 LatticeSpec{Geometry::square, 5, 4, Boundary::open},
                                 LatticeSpec{Geometry::hexagonal, 7, 6, Boundary::cylinder_periodic_y},
                                 LatticeSpec{Geometry::hexagonal, 5, 4, Boundary::open},
                                 LatticeSpec{Geometry::chain, 8, 1, Boundary::open, 1}}) {
    const Lattice lat = build_lattice(spec);
    const BasisConfig v = vacuum_config(lat);
    for (int s = 0; s < lat.num_sites(); ++s) EXPECT_EQ(gauss_eigenvalue_u1(lat, v, s), 0) << lat.describe();
  }
}

TEST(Gauss, MatchesDefinitionOracle) {
  const Lattice lat = build_lattice({Geometry::square, 3, 2, Boundary::open});
  std::mt19937_64 rng(7);
  for (int k = 0; k < 500; ++k) {
    const std::uint64_t bits = rng() & ((std::uint64_t{1} << lat.num_bits()) - 1);
    const BasisConfig cfg = unpack(bits);
    for (int s = 0; s < lat.num_sites(); ++s) EXPECT_EQ(gauss_eigenvalue_u1(lat, cfg, s), oracle::gauss(lat, bits, s));
  }
}

TEST(Gauss, FlippedInteriorLinkChargesEndpoints) {
  const Lattice lat = build_lattice({Geometry::square, 4, 4, Boundary::open});
  BasisConfig v = vacuum_config(lat);
  const int l = *lat.x_link(lat.site(1, 1));
  v.flip(lat.link_bit(l));
  EXPECT_EQ(gauss_eigenvalue_u1(lat, v, lat.link(l).from), -1);
  EXPECT_EQ(gauss_eigenvalue_u1(lat, v, lat.link(l).to), 1);
  for (int s = 0; s < lat.num_sites(); ++s) {
    if (s == lat.link(l).from || s == lat.link(l).to) continue;
    EXPECT_EQ(gauss_eigenvalue_u1(lat, v, s), 0);
  }
}

// Reversing a link's orientation while negating its field leaves G unchanged.
TEST(Gauss, InvariantUnderOrientationRelabeling) {
  const Lattice lat = build_lattice({Geometry::square, 3, 3, Boundary::open});
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const std::uint64_t bits = rng() & ((std::uint64_t{1} << lat.num_bits()) - 1);
    for (int s = 0; s < lat.num_sites(); ++s) {
      double div = 0.0;
      for (int l = 0; l < lat.num_links(); ++l) {
        const auto& lk = lat.link(l);
        const double sz = ((bits >> lat.link_bit(l)) & 1u) - 0.5;
        // reversed convention: link points to -> from and carries -sz
        if (lk.to == s) div += -sz;
        if (lk.from == s) div -= -sz;
      }
      double ref = 0.0;
      for (int l = 0; l < lat.num_links(); ++l) {
        if (lat.link(l).from == s) ref -= 0.5;
        if (lat.link(l).to == s) ref += 0.5;
      }
      const int g = static_cast<int>(std::lround(((bits >> s) & 1u) - (div - ref) - (1 - lat.mass_sign(s)) / 2.0));
      EXPECT_EQ(g, gauss_eigenvalue_u1(lat, unpack(bits), s));
    }
  }
}

TEST(Z2Vertex, ParityExamples) {
  const Lattice lat = build_lattice({Geometry::square, 4, 3, Boundary::open});
  BasisConfig c;
  for (int s = 0; s < lat.num_sites(); ++s) EXPECT_EQ(z2_vertex_eigenvalue(lat, c, s), 1);
  const int l = *lat.y_link(lat.site(2, 1));
  c.flip(lat.link_bit(l));
  for (int s = 0; s < lat.num_sites(); ++s)
    EXPECT_EQ(z2_vertex_eigenvalue(lat, c, s), (s == lat.link(l).from || s == lat.link(l).to) ? -1 : 1);

  // path of flipped links: -1 only at the ends
  BasisConfig p;
  const int path[] = {lat.site(0, 0), lat.site(1, 0), lat.site(1, 1), lat.site(2, 1), lat.site(3, 1), lat.site(3, 2)};
  for (int k = 0; k + 1 < 6; ++k) p.flip(lat.link_bit(*lat.link_between(path[k], path[k + 1])));
  for (int s = 0; s < lat.num_sites(); ++s) {
    int parity = 0;
    for (int l2 : lat.incident_links(s)) parity ^= p.test(lat.link_bit(l2));
    EXPECT_EQ(z2_vertex_eigenvalue(lat, p, s), parity ? -1 : 1);
    EXPECT_EQ(z2_vertex_eigenvalue(lat, p, s), (s == path[0] || s == path[5]) ? -1 : 1);
  }
}

TEST(Z2Vertex, ProductOverCylinderIsOne) {
  const Lattice lat = build_lattice({Geometry::square, 5, 4, Boundary::cylinder_periodic_y});
  std::mt19937 rng(3);
  for (int k = 0; k < 100; ++k) {
    BasisConfig c;
    for (int f = 0; f < 9; ++f) c.flip(lat.link_bit(static_cast<int>(rng() % lat.num_links())));
    int prod = 1;
    for (int s = 0; s < lat.num_sites(); ++s) prod *= z2_vertex_eigenvalue(lat, c, s);
    EXPECT_EQ(prod, 1);
  }
}

TEST(Sector, Z2SinglePlaquetteHas16States) {
  const Lattice lat = build_lattice({Geometry::square, 2, 2, Boundary::open});
  EXPECT_EQ(enumerate_sector(lat, {}, GaugeModel::z2).size(), 16u);
}

TEST(Sector, TwoByTwoMatchesBruteForce) {
  const Lattice lat = build_lattice({Geometry::square, 2, 2, Boundary::open});
  const auto basis = enumerate_sector(lat, {}, GaugeModel::u1_qlm);
  const auto oracle_set = oracle::brute_force_sector(lat, {});
  EXPECT_EQ(packed(lat, basis), oracle_set);
  EXPECT_EQ(basis.size(), 3u);  // regression constant
}

// Exhaustive cross-check on every small lattice and a spread of layouts.
TEST(Sector, EnumeratorEqualsBruteForceUpTo20Bits) {
  std::vector<LatticeSpec> specs;
  for (int lx = 2; lx <= 4; ++lx)
    for (int ly = 2; ly <= 3; ++ly) specs.push_back({Geometry::square, lx, ly, Boundary::open});
  specs.push_back({Geometry::hexagonal, 3, 2, Boundary::open});
  specs.push_back({Geometry::hexagonal, 4, 3, Boundary::open});
  specs.push_back({Geometry::hexagonal, 5, 2, Boundary::open});
  specs.push_back({Geometry::chain, 8, 1, Boundary::open, 1});
  specs.push_back({Geometry::chain, 9, 1, Boundary::open, 0});
  int checked = 0;
  for (const auto& spec : specs) {
    const Lattice lat = build_lattice(spec);
    if (lat.num_bits() > 20) continue;
    const int last = lat.num_sites() - 1;
    for (const std::map<int, int>& charges :
         {std::map<int, int>{}, std::map<int, int>{{0, -1}, {last, 1}}, std::map<int, int>{{0, 1}, {last, -1}},
          std::map<int, int>{{1, 1}}}) {
      ChargeLayout layout;
      layout.static_charges = charges;
      const auto basis = enumerate_sector(lat, layout, GaugeModel::u1_qlm);
      EXPECT_EQ(packed(lat, basis), oracle::brute_force_sector(lat, charges)) << lat.describe();
      for (const auto& cfg : basis) EXPECT_TRUE(satisfies_gauss_u1(lat, cfg, layout));
      ++checked;
    }
  }
  EXPECT_GE(checked, 20);
}

TEST(Sector, InfeasibleChargeLayoutGivesEmptyBasis) {
  const Lattice lat = build_lattice({Geometry::square, 2, 2, Boundary::open});
  ChargeLayout layout;
  layout.static_charges = {{0, 1}, {1, 1}, {2, 1}, {3, 1}};
  EXPECT_TRUE(oracle::brute_force_sector(lat, layout.static_charges).empty());
  EXPECT_TRUE(enumerate_sector(lat, layout, GaugeModel::u1_qlm).empty());
  // A single unbalanced charge is compensated by dynamical matter.
  ChargeLayout single;
  single.static_charges = {{1, 1}};
  EXPECT_FALSE(oracle::brute_force_sector(lat, single.static_charges).empty());
}

TEST(Sector, SortedDuplicateFreeAndIndexed) {
  const Lattice lat = build_lattice({Geometry::square, 4, 3, Boundary::open});
  const auto basis = enumerate_sector(lat, ChargeLayout::string_pair(lat.site(1, 0), lat.site(3, 2)), GaugeModel::u1_qlm);
  ASSERT_GT(basis.size(), 1u);
  for (std::size_t i = 0; i + 1 < basis.size(); ++i) EXPECT_LT(basis[i], basis[i + 1]);
  for (std::size_t i = 0; i < basis.size(); ++i) EXPECT_EQ(basis.find(basis[i]), i);
  BasisConfig absent;
  absent.set(lat.num_bits() + 3);
  EXPECT_FALSE(basis.find(absent).has_value());
}

TEST(Sector, CapIsEnforced) {
  const Lattice lat = build_lattice({Geometry::square, 4, 4, Boundary::open});
  try {
    enumerate_sector(lat, {}, GaugeModel::u1_qlm, 10);
    FAIL() << "expected SectorSizeError";
  } catch (const SectorSizeError& e) {
    EXPECT_EQ(e.cap(), 10u);
    EXPECT_NE(std::string(e.what()).find("dimension"), std::string::npos);
  }
  const Lattice big = build_lattice({Geometry::square, 7, 6, Boundary::cylinder_periodic_y});
  EXPECT_THROW(enumerate_sector(big, {}, GaugeModel::z2, 1000), SectorSizeError);
}

TEST(Sector, BinaryDumpRoundTrip) {
  const Lattice lat = build_lattice({Geometry::hexagonal, 4, 3, Boundary::open});
  const auto basis = enumerate_sector(lat, {}, GaugeModel::u1_qlm);
  std::stringstream ss;
  save_sector(ss, basis);
  const auto back = load_sector(ss);
  EXPECT_EQ(back.model(), basis.model());
  EXPECT_TRUE(back.matches(lat));
  ASSERT_EQ(back.size(), basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) EXPECT_EQ(back[i], basis[i]);

  std::stringstream bad("NOTASECTORDUMP");
  EXPECT_THROW(load_sector(bad), std::runtime_error);
}
