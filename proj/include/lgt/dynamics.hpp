#pragma once

// Real-time evolution |psi(t)> = exp(-iHt)|psi(0)> and the observables
// recorded along a trajectory.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "lgt/gauge_basis.hpp"
#include "lgt/lattice.hpp"
#include "lgt/models.hpp"
#include "lgt/operators.hpp"

namespace lgt {

struct TimeGrid {
  double t_max = 10.0;
  int n_points = 201;  // includes t = 0
  int substeps = 1;    // propagator steps between recorded points

  void validate() const {
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("t_max must be finite and >= 0");
    if (n_points < 1) throw std::invalid_argument("n_points must be >= 1");
    if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  }
  double time(int k) const { return n_points == 1 ? 0.0 : t_max * k / (n_points - 1); }
  std::vector<double> times() const {
    std::vector<double> t(n_points);
    for (int k = 0; k < n_points; ++k) t[k] = time(k);
    return t;
  }
};

class KrylovConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<StateVector> states;
  std::vector<double> norm_error;  // | ||psi|| - 1 | before any renormalization
};

inline StateVector basis_vector(std::size_t dim, std::size_t index) {
  if (index >= dim) throw std::out_of_range("basis index outside dimension");
  StateVector v = StateVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return v;
}

inline void require_hermitian(double defect) {
  if (defect > kHermitianTolerance)
    throw NonHermitianError("Hamiltonian is not Hermitian (max |H - H^dag| = " + std::to_string(defect) + ")");
}

// Full diagonalization; exact up to round-off at every grid point.
inline Trajectory evolve_dense(const DenseOperator& h, const StateVector& psi0, const TimeGrid& grid) {
  grid.validate();
  require_hermitian(h.max_hermiticity_defect());
  if (static_cast<std::size_t>(psi0.size()) != h.dimension()) throw std::invalid_argument("state/operator dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.matrix());
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  const Eigen::VectorXd& w = es.eigenvalues();
  const Eigen::MatrixXcd& v = es.eigenvectors();
  const StateVector c0 = v.adjoint() * psi0;
  Trajectory tr;
  for (int k = 0; k < grid.n_points; ++k) {
    const double t = grid.time(k);
    StateVector psi = psi0;
    if (t != 0.0) {
      StateVector c = c0;
      for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(cplx(0.0, -w(i) * t));
      psi = v * c;
    }
    tr.t.push_back(t);
    tr.norm_error.push_back(std::abs(psi.norm() - 1.0));
    tr.states.push_back(std::move(psi));
  }
  return tr;
}

inline Trajectory evolve_dense(const SparseOperator& h, const StateVector& psi0, const TimeGrid& grid) {
  return evolve_dense(DenseOperator(h.to_dense()), psi0, grid);
}

struct KrylovOptions {
  int subspace = 30;
  double tol = 1e-10;     // per-step error estimate bound
  int max_halvings = 40;
};

namespace detail {

// One Lanczos step of length dt. Returns false if the error estimate exceeds
// tol; `out` is then untouched.
template <class Op>
bool lanczos_step(const Op& h, const StateVector& psi, double dt, const KrylovOptions& opt, StateVector& out) {
  const double nrm = psi.norm();
  if (nrm == 0.0) {
    out = psi;
    return true;
  }
  const int m_max = std::max(1, std::min<int>(opt.subspace, static_cast<int>(psi.size())));
  std::vector<StateVector> q;
  q.reserve(m_max + 1);
  q.push_back(psi / nrm);
  std::vector<double> alpha, beta;
  double beta_last = 0.0;
  int m = 0;
  for (; m < m_max; ++m) {
    StateVector w = h.apply(q[m]);
    const double a = q[m].dot(w).real();
    alpha.push_back(a);
    // full reorthogonalization, applied twice
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qi : q) w -= qi * qi.dot(w);
    const double b = w.norm();
    beta_last = b;
    if (b < 1e-13 * std::max(1.0, std::abs(a))) {
      beta_last = 0.0;
      ++m;
      break;
    }
    if (m + 1 < m_max) {
      beta.push_back(b);
      q.push_back(w / b);
    }
  }
  const int dim = static_cast<int>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) t(i, i) = alpha[i];
  for (int i = 0; i + 1 < dim; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const Eigen::VectorXd& w = es.eigenvalues();
  const Eigen::MatrixXd& v = es.eigenvectors();
  Eigen::VectorXcd c(dim);
  for (int i = 0; i < dim; ++i) c(i) = std::exp(cplx(0.0, -w(i) * dt)) * v(0, i);
  const Eigen::VectorXcd y = v.cast<cplx>() * c;  // exp(-i T dt) e_0
  const double err = nrm * beta_last * std::abs(y(dim - 1));
  if (err > opt.tol) return false;
  out = StateVector::Zero(psi.size());
  for (int i = 0; i < dim; ++i) out += q[i] * y(i);
  out *= nrm;
  return true;
}

}  // namespace detail

// Lanczos propagator with step halving. Each recorded interval is split into
// grid.substeps steps, and any step whose error estimate exceeds opt.tol is
// halved until it converges.
template <class Op>
Trajectory evolve_krylov(const Op& h, const StateVector& psi0, const TimeGrid& grid, const KrylovOptions& opt = {}) {
  grid.validate();
  require_hermitian(h.max_hermiticity_defect());
  if (static_cast<std::size_t>(psi0.size()) != h.dimension()) throw std::invalid_argument("state/operator dimension mismatch");
  Trajectory tr;
  StateVector psi = psi0;
  double drift = std::abs(psi.norm() - 1.0);
  tr.t.push_back(0.0);
  tr.states.push_back(psi);
  tr.norm_error.push_back(drift);
  const double n0 = psi.norm();
  for (int k = 1; k < grid.n_points; ++k) {
    const double t0 = grid.time(k - 1), t1 = grid.time(k);
    const double interval = (t1 - t0) / grid.substeps;
    for (int s = 0; s < grid.substeps; ++s) {
      double remaining = interval;
      double dt = interval;
      int halvings = 0;
      while (remaining > 0.0) {
        dt = std::min(dt, remaining);
        StateVector next;
        if (detail::lanczos_step(h, psi, dt, opt, next)) {
          psi = std::move(next);
          remaining -= dt;
          if (remaining < 1e-15 * std::max(1.0, interval)) remaining = 0.0;
        } else {
          if (++halvings > opt.max_halvings)
            throw KrylovConvergenceError("Krylov step did not converge at t = " + std::to_string(t1 - remaining));
          dt *= 0.5;
        }
      }
      const double nrm = psi.norm();
      drift += std::abs(nrm - n0);
      if (nrm > 0.0) psi *= n0 / nrm;
    }
    tr.t.push_back(t1);
    tr.states.push_back(psi);
    tr.norm_error.push_back(drift);
  }
  return tr;
}

// ------------------------------------------------------------ observables --

struct ObservableSeries {
  std::vector<double> t;
  std::vector<double> fidelity;      // |<psi(0)|psi(t)>|^2
  std::vector<double> overlap;       // total weight on the other unbroken strings
  std::vector<double> occupation;    // <n> relative to the string state
  std::vector<double> energy;        // <H>
  std::vector<double> norm_error;

  std::size_t size() const { return t.size(); }
};

// Staggered occupation: n on s = +1 sites, 1 - n on s = -1 sites. Zero for
// the vacuum and the unbroken strings, 2 per broken link pair.
inline int staggered_occupation(const Lattice& lat, const BasisConfig& cfg, const std::vector<bool>& patch = {}) {
  int n = 0;
  for (int s = 0; s < lat.num_sites(); ++s) {
    if (!patch.empty() && !patch[s]) continue;
    const bool occ = matter_bit(cfg, s);
    n += lat.mass_sign(s) > 0 ? occ : !occ;
  }
  return n;
}

// Z2 matter: number of vertices whose A_r departs from the static charges.
inline int z2_charge_occupation(const Lattice& lat, const BasisConfig& cfg, const ChargeLayout& layout) {
  int n = 0;
  for (int s = 0; s < lat.num_sites(); ++s) {
    const int expected = layout.target(s) != 0 ? -1 : 1;
    n += z2_vertex_eigenvalue(lat, cfg, s) != expected;
  }
  return n;
}

template <class Configs, class F>
Eigen::VectorXd diagonal_observable(const Configs& configs, F&& f) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(std::size(configs)));
  Eigen::Index i = 0;
  for (const auto& c : configs) d(i++) = static_cast<double>(f(c));
  return d;
}

template <class Op>
ObservableSeries measure(const Op& h, const Trajectory& tr, std::size_t initial, const std::vector<std::size_t>& others,
                         const Eigen::VectorXd& occupation) {
  const auto dim = static_cast<Eigen::Index>(h.dimension());
  if (occupation.size() != dim || initial >= h.dimension()) throw BasisMismatchError("observable basis mismatch");
  for (std::size_t o : others)
    if (o >= h.dimension()) throw BasisMismatchError("string index outside the basis");
  ObservableSeries s;
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const StateVector& psi = tr.states[k];
    if (psi.size() != dim) throw BasisMismatchError("trajectory state has the wrong dimension");
    const Eigen::VectorXd p = psi.cwiseAbs2();
    double ov = 0.0;
    for (std::size_t o : others)
      if (o != initial) ov += p(static_cast<Eigen::Index>(o));
    s.t.push_back(tr.t[k]);
    s.fidelity.push_back(p(static_cast<Eigen::Index>(initial)));
    s.overlap.push_back(ov);
    s.occupation.push_back(p.dot(occupation));
    s.energy.push_back(psi.dot(h.apply(psi)).real());
    s.norm_error.push_back(tr.norm_error[k]);
  }
  return s;
}

}  // namespace lgt
