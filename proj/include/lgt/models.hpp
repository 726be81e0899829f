#pragma once

// Hamiltonian assembly for the spin-1/2 U(1) quantum link model (square and
// brick-wall lattices, 1+1D chain) and the Z2 gauge theory.
//
// U(1):  H = -kappa sum_l s_l (phi^dag_from U_l phi_to + h.c.)
//            + m sum_j s_j n_j + g sum_l S^z_l - J sum_P (U_P + U_P^dag)
// Z2:    H = -m sum_r A_r - J sum_P B_P - kappa sum_l sigma^z_l - g sum_l sigma^x_l
//
// Z2 is represented in the sigma^x product basis: sigma^x_l = 1 - 2 b_l,
// sigma^z flips one link, B_P flips every link of a plaquette.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lgt/gauge_basis.hpp"
#include "lgt/lattice.hpp"
#include "lgt/operators.hpp"

namespace lgt {

struct Couplings {
  double kappa = 1.0;
  double mass = 0.0;
  double efield = 0.0;
  double plaq = 0.0;

  bool finite() const {
    return std::isfinite(kappa) && std::isfinite(mass) && std::isfinite(efield) && std::isfinite(plaq);
  }
};

// ---------------------------------------------------------------- U(1) -----

// Diagonal energy bookkeeping: E = m * mass_count + (g / 2) * field_count with
// mass_count = sum_j s_j n_j and field_count = sum_l 2 S^z_l.
struct U1DiagonalCounts {
  long mass_count = 0;
  long field_count = 0;
  bool operator==(const U1DiagonalCounts&) const = default;
};

inline U1DiagonalCounts u1_diagonal_counts(const Lattice& lat, const BasisConfig& cfg) {
  U1DiagonalCounts d;
  for (int s = 0; s < lat.num_sites(); ++s)
    if (matter_bit(cfg, s)) d.mass_count += lat.mass_sign(s);
  for (int l = 0; l < lat.num_links(); ++l) d.field_count += link_bit(lat, cfg, l) ? 1 : -1;
  return d;
}

inline double u1_diagonal_energy(const Lattice& lat, const BasisConfig& cfg, const Couplings& c) {
  const auto d = u1_diagonal_counts(lat, cfg);
  return c.mass * static_cast<double>(d.mass_count) + 0.5 * c.efield * static_cast<double>(d.field_count);
}

// +1 if U_P acts (raising links unset, lowering links set), -1 if U_P^dag
// acts, 0 if the plaquette is not flippable.
inline int plaquette_orientation(const Lattice& lat, const BasisConfig& cfg, int p) {
  bool forward = true;
  bool backward = true;
  for (const auto& e : lat.plaquette(p)) {
    const bool b = link_bit(lat, cfg, e.link);
    const bool want_forward = e.sign < 0;
    forward = forward && (b == want_forward);
    backward = backward && (b != want_forward);
  }
  return forward ? 1 : (backward ? -1 : 0);
}

inline BasisConfig flip_plaquette(const Lattice& lat, BasisConfig cfg, int p) {
  for (const auto& e : lat.plaquette(p)) cfg.flip(lat.link_bit(e.link));
  return cfg;
}

inline int count_flippable_plaquettes(const Lattice& lat, const BasisConfig& cfg) {
  int n = 0;
  for (int p = 0; p < lat.num_plaquettes(); ++p) n += plaquette_orientation(lat, cfg, p) != 0;
  return n;
}

// Hopping across link l. Returns true and writes the partner configuration if
// either the term phi^dag_from U phi_to or its conjugate acts on cfg.
inline bool u1_hop(const Lattice& lat, const BasisConfig& cfg, int l, BasisConfig& out) {
  const Link& k = lat.link(l);
  const bool b = link_bit(lat, cfg, l);
  const bool n_from = matter_bit(cfg, k.from);
  const bool n_to = matter_bit(cfg, k.to);
  // raise: particle moves to -> from; lower: particle moves from -> to
  const bool raise = !b && !n_from && n_to;
  const bool lower = b && n_from && !n_to;
  if (!raise && !lower) return false;
  out = cfg;
  out.flip(lat.link_bit(l));
  out.flip(k.from);
  out.flip(k.to);
  return true;
}

template <class Emit>
void for_each_u1_hop(const Lattice& lat, const BasisConfig& cfg, const Couplings& c, Emit&& emit) {
  BasisConfig partner;
  for (int l = 0; l < lat.num_links(); ++l)
    if (u1_hop(lat, cfg, l, partner)) emit(partner, -c.kappa * lat.hop_sign(l));
}

template <class Emit>
void for_each_u1_plaquette_flip(const Lattice& lat, const BasisConfig& cfg, const Couplings& c, Emit&& emit) {
  for (int p = 0; p < lat.num_plaquettes(); ++p)
    if (plaquette_orientation(lat, cfg, p) != 0) emit(flip_plaquette(lat, cfg, p), -c.plaq);
}

template <class Emit>
void for_each_u1_move(const Lattice& lat, const BasisConfig& cfg, const Couplings& c, Emit&& emit) {
  if (c.kappa != 0.0) for_each_u1_hop(lat, cfg, c, emit);
  if (c.plaq != 0.0) for_each_u1_plaquette_flip(lat, cfg, c, emit);
}

namespace detail {

inline void check_basis(const Lattice& lat, const SectorBasis& basis, GaugeModel model) {
  if (!basis.matches(lat))
    throw BasisMismatchError("basis built for " + std::to_string(basis.n_sites()) + " sites/" +
                             std::to_string(basis.n_links()) + " links, lattice has " +
                             std::to_string(lat.num_sites()) + "/" + std::to_string(lat.num_links()));
  if (basis.model() != model) throw BasisMismatchError("basis enumerated for " + to_string(basis.model()));
}

template <class Diagonal, class Moves>
SparseOperator assemble(const SectorBasis& basis, Diagonal&& diagonal, Moves&& moves) {
  std::vector<Triplet> triplets;
  triplets.reserve(basis.size() * 4);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const BasisConfig& cfg = basis[i];
    triplets.push_back({i, i, cplx(diagonal(cfg), 0.0)});
    moves(cfg, [&](const BasisConfig& partner, double amp) {
      auto j = basis.find(partner);
      if (!j) throw BasisMismatchError("Hamiltonian maps basis state " + std::to_string(i) + " outside the sector");
      triplets.push_back({i, *j, cplx(amp, 0.0)});
    });
  }
  return SparseOperator(basis.size(), std::move(triplets), basis);
}

inline SparseOperator build_u1(const Lattice& lat, const SectorBasis& basis, const Couplings& c) {
  check_basis(lat, basis, GaugeModel::u1_qlm);
  return assemble(
      basis, [&](const BasisConfig& cfg) { return u1_diagonal_energy(lat, cfg, c); },
      [&](const BasisConfig& cfg, auto&& emit) { for_each_u1_move(lat, cfg, c, emit); });
}

}  // namespace detail

inline SparseOperator build_u1_qlm(const Lattice& lat, const SectorBasis& basis, const Couplings& c) {
  if (lat.geometry() == Geometry::hexagonal) throw BasisMismatchError("build_u1_qlm expects a square lattice");
  return detail::build_u1(lat, basis, c);
}

inline SparseOperator build_u1_qlm_hex(const Lattice& lat, const SectorBasis& basis, const Couplings& c) {
  if (lat.geometry() != Geometry::hexagonal) throw BasisMismatchError("build_u1_qlm_hex expects a hexagonal lattice");
  return detail::build_u1(lat, basis, c);
}

// Dispatches on the lattice geometry.
inline SparseOperator build_u1_model(const Lattice& lat, const SectorBasis& basis, const Couplings& c) {
  return detail::build_u1(lat, basis, c);
}

// ------------------------------------------------------------------ Z2 -----

// With matter eliminated through Gauss's law, A_r = -1 signals a charge at r.
// Static charges are part of the background, so the mass term weighs A_r with
// the static sign q_r (-1 on a static charge): -m sum_r q_r A_r counts only
// dynamical charges.
struct Z2DiagonalCounts {
  long vertex_sum = 0;  // sum_r q_r A_r
  long field_sum = 0;   // sum_l sigma^x_l
  bool operator==(const Z2DiagonalCounts&) const = default;
};

inline Z2DiagonalCounts z2_diagonal_counts(const Lattice& lat, const BasisConfig& cfg, const ChargeLayout& layout = {}) {
  Z2DiagonalCounts d;
  for (int s = 0; s < lat.num_sites(); ++s)
    d.vertex_sum += (layout.target(s) != 0 ? -1 : 1) * z2_vertex_eigenvalue(lat, cfg, s);
  for (int l = 0; l < lat.num_links(); ++l) d.field_sum += link_bit(lat, cfg, l) ? -1 : 1;
  return d;
}

inline double z2_diagonal_energy(const Lattice& lat, const BasisConfig& cfg, const Couplings& c,
                                 const ChargeLayout& layout = {}) {
  const auto d = z2_diagonal_counts(lat, cfg, layout);
  return -c.mass * static_cast<double>(d.vertex_sum) - c.efield * static_cast<double>(d.field_sum);
}

template <class Emit>
void for_each_z2_move(const Lattice& lat, const BasisConfig& cfg, const Couplings& c, Emit&& emit) {
  if (c.kappa != 0.0) {
    for (int l = 0; l < lat.num_links(); ++l) {
      BasisConfig partner = cfg;
      partner.flip(lat.link_bit(l));
      emit(partner, -c.kappa);
    }
  }
  if (c.plaq != 0.0)
    for (int p = 0; p < lat.num_plaquettes(); ++p) emit(flip_plaquette(lat, cfg, p), -c.plaq);
}

inline SparseOperator build_z2(const Lattice& lat, const SectorBasis& basis, const Couplings& c,
                               const ChargeLayout& layout = {}) {
  detail::check_basis(lat, basis, GaugeModel::z2);
  return detail::assemble(
      basis, [&](const BasisConfig& cfg) { return z2_diagonal_energy(lat, cfg, c, layout); },
      [&](const BasisConfig& cfg, auto&& emit) { for_each_z2_move(lat, cfg, c, emit); });
}

// ---------------------------------------------------------- 1+1D chain -----

struct ChainModel {
  Lattice lattice;
  SectorBasis basis;
  SparseOperator hamiltonian;
};

// Open chain of `length` sites; `first_site_odd` selects the staggering of
// site 0. Charges in `layout` refer to chain site indices.
inline ChainModel build_qlm_1d(int length, const ChargeLayout& layout, const Couplings& c, bool first_site_odd = true,
                               std::size_t cap = kDefaultSectorCap) {
  Lattice lat = make_chain(length, first_site_odd ? 1 : 0);
  for (auto [s, q] : layout.static_charges)
    if (s < 0 || s >= length) throw LatticeError("charge site " + std::to_string(s) + " outside the chain");
  SectorBasis basis = enumerate_sector(lat, layout, GaugeModel::u1_qlm, cap);
  SparseOperator h = detail::build_u1(lat, basis, c);
  return {std::move(lat), std::move(basis), std::move(h)};
}

// ----------------------------------------------------------------------------

inline double diagonal_energy(const SparseOperator& op, const BasisConfig& cfg) {
  auto i = op.basis().find(cfg);
  if (!i) throw BasisMismatchError("configuration not in operator basis");
  return op.element(*i, *i).real();
}

}  // namespace lgt
