#include <gtest/gtest.h>

#include <random>

#include "lgt/dynamics.hpp"
#include "lgt/strings.hpp"
#include "oracles.hpp"

using namespace lgt;

namespace {

DenseOperator random_hermitian(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(nd(rng), nd(rng));
  return DenseOperator((a + a.adjoint()) / 2.0);
}

StateVector random_state(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  StateVector v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v / v.norm();
}

double max_deviation(const Trajectory& a, const Trajectory& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k) d = std::max(d, (a.states[k] - b.states[k]).norm());
  return d;
}

struct LModel {
  Lattice lat = build_lattice({Geometry::square, 7, 6, Boundary::cylinder_periodic_y});
  ChargeLayout layout = ChargeLayout::string_pair(lat.site(1, 2), lat.site(5, 5));
  MinimalModelBasis mb;
  DenseOperator h;
  std::size_t initial = 0;

  explicit LModel(double plaq) {
    const Couplings c{1.0, 12.0, 24.0, plaq};
    const auto seed = build_string_state(lat, layout, StringShape::l_shaped);
    mb = enumerate_resonant_manifold(lat, layout, enumerate_minimal_strings(lat, layout, seed.path), c);
    h = build_minimal_model(mb, c);
    initial = *mb.find(seed.config);
  }

  Eigen::VectorXd occupation() const {
    std::vector<BasisConfig> cfgs;
    for (const auto& s : mb.states) cfgs.push_back(s.config);
    return diagonal_observable(cfgs, [&](const BasisConfig& c) { return staggered_occupation(lat, c); });
  }
};

}  // namespace

TEST(TimeGrid, PointsAndValidation) {
  const TimeGrid g{10.0, 201, 1};
  EXPECT_DOUBLE_EQ(g.time(0), 0.0);
  EXPECT_DOUBLE_EQ(g.time(200), 10.0);
  EXPECT_DOUBLE_EQ(g.time(100), 5.0);
  EXPECT_EQ(g.times().size(), 201u);
  EXPECT_THROW((TimeGrid{10.0, 0, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((TimeGrid{-1.0, 5, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((TimeGrid{1.0, 5, 0}.validate()), std::invalid_argument);
}

TEST(Propagator, TwoLevelRabiOscillation) {
  const double j = 0.7;
  Eigen::MatrixXcd m(2, 2);
  m << 0.0, -j, -j, 0.0;
  const DenseOperator h(m);
  const TimeGrid grid{10.0, 101, 1};
  for (const auto& tr : {evolve_dense(h, basis_vector(2, 0), grid), evolve_krylov(h, basis_vector(2, 0), grid)}) {
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      const double c = std::cos(j * tr.t[k]);
      EXPECT_NEAR(std::norm(tr.states[k](0)), c * c, 1e-12);
    }
  }
}

TEST(Propagator, TimeZeroIsIdentity) {
  const auto h = random_hermitian(20, 1);
  const auto psi = random_state(20, 2);
  const TimeGrid grid{0.0, 1, 1};
  EXPECT_LE((evolve_dense(h, psi, grid).states[0] - psi).norm(), 1e-14);
  EXPECT_LE((evolve_krylov(h, psi, grid).states[0] - psi).norm(), 1e-14);
}

TEST(Propagator, DiagonalHamiltonianOnlyAddsPhases) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) m(i, i) = 0.3 * i - 1.0;
  const auto psi = random_state(5, 9);
  const auto tr = evolve_krylov(DenseOperator(m), psi, {4.0, 9, 1});
  for (std::size_t k = 0; k < tr.t.size(); ++k)
    for (int i = 0; i < 5; ++i) {
      EXPECT_NEAR(std::abs(tr.states[k](i)), std::abs(psi(i)), 1e-12);
      EXPECT_NEAR(std::abs(tr.states[k](i) - psi(i) * std::exp(cplx(0.0, -m(i, i).real() * tr.t[k]))), 0.0, 1e-10);
    }
}

TEST(Propagator, ZeroHamiltonianFreezesTheState) {
  const DenseOperator h(Eigen::MatrixXcd::Zero(8, 8));
  const auto psi = random_state(8, 4);
  for (const auto& tr : {evolve_dense(h, psi, {5.0, 11, 1}), evolve_krylov(h, psi, {5.0, 11, 1})})
    for (const auto& s : tr.states) EXPECT_LE((s - psi).norm(), 1e-14);
}

TEST(Propagator, EigenstateKeepsFidelityOne) {
  const auto h = random_hermitian(30, 5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.matrix());
  const StateVector v = es.eigenvectors().col(7);
  const auto tr = evolve_krylov(h, v, {10.0, 51, 1});
  for (const auto& s : tr.states) EXPECT_NEAR(std::norm(v.dot(s)), 1.0, 1e-10);
}

TEST(Propagator, RejectsNonHermitian) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
  m(0, 1) = 1.0;
  const DenseOperator h(m);
  EXPECT_THROW(evolve_dense(h, basis_vector(3, 0), {}), NonHermitianError);
  EXPECT_THROW(evolve_krylov(h, basis_vector(3, 0), {}), NonHermitianError);
  EXPECT_THROW(evolve_dense(random_hermitian(3, 1), basis_vector(4, 0), {}), std::invalid_argument);
  EXPECT_THROW(basis_vector(3, 3), std::out_of_range);
}

TEST(Propagator, KrylovMatchesDenseOnRandomInstances) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto h = random_hermitian(100, 10 + seed);
    const auto psi = random_state(100, 20 + seed);
    const TimeGrid grid{10.0, 41, 1};
    const auto d = evolve_dense(h, psi, grid);
    const auto k = evolve_krylov(h, psi, grid);
    EXPECT_LE(max_deviation(d, k), 1e-8) << "seed " << seed;
    for (std::size_t i = 0; i < d.states.size(); ++i) {
      EXPECT_LE(d.norm_error[i], 1e-10);
      EXPECT_LE(k.norm_error[i], 1e-10);
    }
  }
}

TEST(Propagator, MatchesTaylorExponential) {
  const auto h = random_hermitian(40, 77);
  const auto psi = random_state(40, 78);
  const auto tr = evolve_krylov(h, psi, {3.0, 4, 1});
  for (std::size_t k = 0; k < tr.t.size(); ++k)
    EXPECT_LE((tr.states[k] - oracle::expm_apply(h.matrix(), tr.t[k], psi)).norm(), 1e-9);
}

TEST(Propagator, SparseAndDenseOperatorsAgree) {
  const auto h = random_hermitian(25, 3);
  const auto psi = random_state(25, 4);
  const TimeGrid grid{2.0, 21, 1};
  EXPECT_LE(max_deviation(evolve_krylov(h, psi, grid), evolve_krylov(h.to_sparse(), psi, grid)), 1e-12);
  EXPECT_LE(max_deviation(evolve_dense(h, psi, grid), evolve_dense(h.to_sparse(), psi, grid)), 1e-12);
}

TEST(Propagator, TimeReversalReturnsToStart) {
  const auto h = random_hermitian(50, 8);
  const auto psi = random_state(50, 9);
  const auto fwd = evolve_krylov(h, psi, {4.0, 2, 1});
  const DenseOperator minus(-h.matrix());
  const auto back = evolve_krylov(minus, fwd.states.back(), {4.0, 2, 1});
  EXPECT_LE((back.states.back() - psi).norm(), 1e-9);
}

TEST(Propagator, SmallSubspaceForcesHalving) {
  const auto h = random_hermitian(60, 12);
  const auto psi = random_state(60, 13);
  KrylovOptions opt;
  opt.subspace = 6;
  const TimeGrid grid{2.0, 3, 1};
  EXPECT_LE(max_deviation(evolve_dense(h, psi, grid), evolve_krylov(h, psi, grid, opt)), 1e-8);
  opt.max_halvings = 0;
  EXPECT_THROW(evolve_krylov(h, psi, grid, opt), KrylovConvergenceError);
}

TEST(Observables, MeasureInitialValuesAndBounds) {
  LModel m(1.0);
  const auto occ = m.occupation();
  const auto others = m.mb.string_indices();
  const auto tr = evolve_dense(m.h, basis_vector(m.mb.dimension(), m.initial), {2.0, 21, 1});
  const auto s = measure(m.h, tr, m.initial, others, occ);
  EXPECT_DOUBLE_EQ(s.fidelity[0], 1.0);
  EXPECT_DOUBLE_EQ(s.overlap[0], 0.0);
  EXPECT_DOUBLE_EQ(s.occupation[0], 0.0);
  EXPECT_NEAR(s.energy[0], 0.0, 1e-14);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_LE(s.fidelity[k] + s.overlap[k], 1.0 + 1e-12);
    EXPECT_GE(s.occupation[k], 0.0);
    EXPECT_NEAR(s.energy[k], 0.0, 1e-10);
  }
  EXPECT_THROW(measure(m.h, tr, m.initial, others, Eigen::VectorXd::Zero(3)), BasisMismatchError);
  EXPECT_THROW(measure(m.h, tr, m.mb.dimension(), others, occ), BasisMismatchError);
}

TEST(Observables, SingleBreakHasOccupationTwo) {
  LModel m(1.0);
  const auto occ = m.occupation();
  std::size_t single = m.mb.dimension();
  for (std::size_t i = 0; i < m.mb.dimension(); ++i)
    if (m.mb.states[i].pattern.segments.size() == 1) single = i;
  ASSERT_LT(single, m.mb.dimension());
  const auto tr = evolve_dense(m.h, basis_vector(m.mb.dimension(), single), {0.0, 1, 1});
  EXPECT_DOUBLE_EQ(measure(m.h, tr, single, {}, occ).occupation[0], 2.0);
}

TEST(Observables, NoPlaquetteTermKeepsOtherStringsEmpty) {
  LModel m(0.0);
  const auto tr = evolve_krylov(m.h, basis_vector(m.mb.dimension(), m.initial), {10.0, 101, 1});
  const auto s = measure(m.h, tr, m.initial, m.mb.string_indices(), m.occupation());
  for (double p : s.overlap) EXPECT_LE(p, 1e-12);
}

TEST(Observables, UnitarityAndEnergyOn560Model) {
  LModel m(2.0);
  const auto psi = basis_vector(m.mb.dimension(), m.initial);
  const TimeGrid grid{10.0, 101, 1};
  const auto d = evolve_dense(m.h, psi, grid);
  const auto k = evolve_krylov(m.h, psi, grid);
  EXPECT_LE(max_deviation(d, k), 1e-8);
  const auto sd = measure(m.h, d, m.initial, m.mb.string_indices(), m.occupation());
  const auto sk = measure(m.h, k, m.initial, m.mb.string_indices(), m.occupation());
  const double e0 = std::max(1.0, std::abs(sd.energy[0]));
  for (std::size_t i = 0; i < sd.size(); ++i) {
    EXPECT_LE(sd.norm_error[i], 1e-10);
    EXPECT_LE(sk.norm_error[i], 1e-10);
    EXPECT_LE(std::abs(sk.energy[i] - sk.energy[0]) / e0, 1e-8);
  }
}
