#pragma once

// Hamiltonians in a sector basis: sparse triplet form for full sectors and a
// dense matrix for the projected minimal model.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lgt/gauge_basis.hpp"

namespace lgt {

using cplx = std::complex<double>;
using StateVector = Eigen::VectorXcd;

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  cplx value{};
};

class NonHermitianError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(std::size_t dim, std::vector<Triplet> triplets, SectorBasis basis = {})
      : dim_(dim), triplets_(std::move(triplets)), basis_(std::move(basis)) {
    std::vector<Eigen::Triplet<cplx>> et;
    et.reserve(triplets_.size());
    for (const auto& t : triplets_) {
      if (t.row >= dim_ || t.col >= dim_) throw std::out_of_range("triplet index outside operator dimension");
      et.emplace_back(static_cast<int>(t.row), static_cast<int>(t.col), t.value);
    }
    matrix_.resize(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    matrix_.setFromTriplets(et.begin(), et.end());
    matrix_.makeCompressed();
  }

  std::size_t dimension() const { return dim_; }
  const std::vector<Triplet>& triplets() const { return triplets_; }
  const SectorBasis& basis() const { return basis_; }
  const Eigen::SparseMatrix<cplx, Eigen::RowMajor>& matrix() const { return matrix_; }

  StateVector apply(const StateVector& v) const { return matrix_ * v; }

  cplx element(std::size_t row, std::size_t col) const {
    return matrix_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  double max_hermiticity_defect() const {
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> d = matrix_ - Eigen::SparseMatrix<cplx, Eigen::RowMajor>(matrix_.adjoint());
    double m = 0.0;
    for (Eigen::Index k = 0; k < d.outerSize(); ++k)
      for (decltype(d)::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
  }

  Eigen::MatrixXcd to_dense() const { return Eigen::MatrixXcd(matrix_); }

 private:
  std::size_t dim_ = 0;
  std::vector<Triplet> triplets_;
  SectorBasis basis_;
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> matrix_;
};

inline constexpr double kHermitianTolerance = 1e-12;

class DenseOperator {
 public:
  DenseOperator() = default;
  explicit DenseOperator(Eigen::MatrixXcd m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("dense operator must be square");
  }

  std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  StateVector apply(const StateVector& v) const { return matrix_ * v; }

  double max_hermiticity_defect() const {
    if (matrix_.size() == 0) return 0.0;
    return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  }
  bool is_hermitian(double tol = kHermitianTolerance) const { return max_hermiticity_defect() <= tol; }

  SparseOperator to_sparse() const {
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i)
      for (Eigen::Index j = 0; j < matrix_.cols(); ++j)
        if (matrix_(i, j) != cplx{}) t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), matrix_(i, j)});
    return SparseOperator(dimension(), std::move(t));
  }

 private:
  Eigen::MatrixXcd matrix_;
};

// Text triplet dump:
//   # lgt-sparse v1 dim=<N> nnz=<K>
//   <row> <col> <re> <im>        (K lines, %.17g)
inline void save_sparse(std::ostream& os, const SparseOperator& op) {
  os << "# lgt-sparse v1 dim=" << op.dimension() << " nnz=" << op.triplets().size() << '\n';
  char buf[96];
  for (const auto& t : op.triplets()) {
    std::snprintf(buf, sizeof buf, "%zu %zu %.17g %.17g\n", t.row, t.col, t.value.real(), t.value.imag());
    os << buf;
  }
}

inline SparseOperator load_sparse(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty sparse dump");
  std::size_t dim = 0, nnz = 0;
  if (std::sscanf(line.c_str(), "# lgt-sparse v1 dim=%zu nnz=%zu", &dim, &nnz) != 2)
    throw std::runtime_error("bad sparse dump header: " + line);
  std::vector<Triplet> t;
  t.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    Triplet x;
    double re = 0, im = 0;
    if (!(is >> x.row >> x.col >> re >> im)) throw std::runtime_error("truncated sparse dump");
    x.value = {re, im};
    t.push_back(x);
  }
  return SparseOperator(dim, std::move(t));
}

}  // namespace lgt
