#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hdd/distance_matrix.hpp"
#include "hdd/errors.hpp"
#include "hdd/graph.hpp"

namespace hdd {

struct AffinityMatrix {
  int n = 0;
  Eigen::MatrixXd w;
  double epsilon = 0.0;
};

// Row-stochastic diffusion operator. stationary_weights holds diag(D) from
// the double normalization, or all-ones for the heat-kernel path where exp(-L)
// is already symmetric.
struct DiffusionOperator {
  int n = 0;
  Eigen::MatrixXd p;
  Eigen::VectorXd stationary_weights;
};

inline void validate_diffusion_operator(const DiffusionOperator& op) {
  if (op.n <= 0 || op.p.rows() != op.n || op.p.cols() != op.n ||
      op.stationary_weights.size() != op.n)
    throw DataError("diffusion operator has inconsistent size");
  for (int i = 0; i < op.n; ++i) {
    if (!(op.stationary_weights(i) > 0.0))
      throw NumericalError("non-positive stationary weight at row " +
                           std::to_string(i));
    double s = op.p.row(i).sum();
    if (std::abs(s - 1.0) > 1e-8)
      throw NumericalError("operator row " + std::to_string(i) +
                           " sums to " + std::to_string(s) + ", expected 1");
    double mn = op.p.row(i).minCoeff();
    if (mn < -1e-12)
      throw NumericalError("operator entry below -1e-12 in row " +
                           std::to_string(i));
  }
  // similarity to a symmetric matrix: D^1/2 P D^-1/2 must be symmetric
  Eigen::VectorXd dh = op.stationary_weights.cwiseSqrt();
  double worst = 0.0;
  for (int i = 0; i < op.n; ++i)
    for (int j = i + 1; j < op.n; ++j)
      worst = std::max(worst, std::abs(dh(i) * op.p(i, j) / dh(j) -
                                       dh(j) * op.p(j, i) / dh(i)));
  if (worst > 1e-10)
    throw NumericalError("operator is not similar to a symmetric matrix "
                         "(residual " + std::to_string(worst) + ")");
}

inline double epsilon_median(const DistanceMatrix& dm, double c = 1.0) {
  if (dm.n < 2) throw DataError("epsilon_median needs at least 2 points");
  if (!(c > 0.0)) throw DataError("epsilon multiplier must be positive");
  std::vector<double> sq;
  sq.reserve(static_cast<size_t>(dm.n) * (dm.n - 1) / 2);
  for (int i = 0; i < dm.n; ++i)
    for (int j = i + 1; j < dm.n; ++j) sq.push_back(dm.d(i, j) * dm.d(i, j));
  std::sort(sq.begin(), sq.end());
  if (sq.back() == 0.0)
    throw DataError("all off-diagonal distances are zero");
  size_t m = sq.size();
  double med = (m % 2 == 1) ? sq[m / 2] : 0.5 * (sq[m / 2 - 1] + sq[m / 2]);
  return c * med;
}

inline AffinityMatrix gaussian_affinity(const DistanceMatrix& dm, double epsilon) {
  if (!(epsilon > 0.0)) throw DataError("epsilon must be positive");
  AffinityMatrix a;
  a.n = dm.n;
  a.epsilon = epsilon;
  a.w = (-dm.d.array().square() / epsilon).exp();
  for (int i = 0; i < a.n; ++i) a.w(i, i) = 1.0;
  return a;
}

inline DiffusionOperator normalize_twice(const AffinityMatrix& a) {
  Eigen::VectorXd s = a.w.rowwise().sum();
  for (int i = 0; i < a.n; ++i)
    if (!(s(i) > 0.0))
      throw DataError("zero kernel row sum at point " + std::to_string(i) +
                      " (isolated under the kernel)");
  Eigen::MatrixXd wt = a.w.array() /
                       (s * s.transpose()).array();  // S^-1 W S^-1
  Eigen::VectorXd d = wt.rowwise().sum();
  for (int i = 0; i < a.n; ++i)
    if (!(d(i) > 0.0))
      throw DataError("zero row sum after double normalization at point " +
                      std::to_string(i));
  DiffusionOperator op;
  op.n = a.n;
  op.p = wt.array().colwise() / d.array();  // D^-1 W~
  op.stationary_weights = std::move(d);
  validate_diffusion_operator(op);
  return op;
}

enum class LaplacianKind { unnormalized, symmetric_normalized };

inline Eigen::MatrixXd graph_laplacian(const WeightedGraph& g,
                                       LaplacianKind kind = LaplacianKind::unnormalized) {
  validate_graph(g);
  require_connected(g);
  int n = g.n_nodes;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
  for (const auto& e : g.edges) {
    w(e.u, e.v) = e.w;
    w(e.v, e.u) = e.w;
    deg(e.u) += e.w;
    deg(e.v) += e.w;
  }
  for (int i = 0; i < n; ++i)
    if (!(deg(i) > 0.0))
      throw DataError("isolated node " + g.name_of(i));
  Eigen::MatrixXd l;
  if (kind == LaplacianKind::unnormalized) {
    l = -w;
    for (int i = 0; i < n; ++i) l(i, i) = deg(i);
  } else {
    Eigen::VectorXd dis = deg.cwiseSqrt().cwiseInverse();
    l = -(dis * dis.transpose()).cwiseProduct(w);
    for (int i = 0; i < n; ++i) l(i, i) = 1.0;
  }
  // enforce exact symmetry against accumulated roundoff
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) l(j, i) = l(i, j);
  return l;
}

// P = exp(-L) through the symmetric eigendecomposition L = Q M Q^T. For the
// unnormalized Laplacian the rows sum to 1 exactly in exact arithmetic; a
// violation beyond 1e-8 (e.g. a normalized Laplacian of a non-regular graph)
// is reported as a numerical error.
inline DiffusionOperator heat_kernel_operator(const Eigen::MatrixXd& l) {
  int n = static_cast<int>(l.rows());
  if (n == 0 || l.cols() != n) throw DataError("laplacian must be square");
  double asym = (l - l.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10)
    throw NumericalError("laplacian asymmetry " + std::to_string(asym) +
                         " exceeds 1e-10");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of the laplacian failed");
  Eigen::VectorXd mu = es.eigenvalues();
  if (mu.minCoeff() < -1e-10)
    throw NumericalError("laplacian has negative eigenvalue " +
                         std::to_string(mu.minCoeff()));
  Eigen::VectorXd em = (-mu.cwiseMax(0.0)).array().exp();
  DiffusionOperator op;
  op.n = n;
  op.p.noalias() = es.eigenvectors() * em.asDiagonal() *
                   es.eigenvectors().transpose();
  op.stationary_weights = Eigen::VectorXd::Ones(n);
  validate_diffusion_operator(op);
  return op;
}

}  // namespace hdd
