#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hdd/errors.hpp"
#include "hdd/kernel.hpp"

namespace hdd {

// Eigendecomposition of the symmetric conjugate A = D^1/2 P D^-1/2 = B L B^T.
// Eigenvalues are sorted descending; basis columns follow that order.
struct SpectralForm {
  int n = 0;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd basis;
  Eigen::VectorXd d_half;
  Eigen::VectorXd d_half_inv;
};

inline SpectralForm spectral_decompose(const DiffusionOperator& op) {
  SpectralForm s;
  s.n = op.n;
  s.d_half = op.stationary_weights.cwiseSqrt();
  s.d_half_inv = s.d_half.cwiseInverse();
  Eigen::MatrixXd a = s.d_half.asDiagonal() * op.p * s.d_half_inv.asDiagonal();
  double resid = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (resid > 1e-8)
    throw NumericalError("symmetrization residual " + std::to_string(resid) +
                         " exceeds 1e-8");
  a = 0.5 * (a + a.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of the diffusion operator failed");
  // SelfAdjointEigenSolver returns ascending order
  s.eigenvalues = es.eigenvalues().reverse();
  s.basis = es.eigenvectors().rowwise().reverse();
  if (s.eigenvalues.maxCoeff() > 1.0 + 1e-8 ||
      s.eigenvalues.minCoeff() < -1.0 - 1e-8)
    throw NumericalError("spectrum escapes [-1, 1]: [" +
                         std::to_string(s.eigenvalues.minCoeff()) + ", " +
                         std::to_string(s.eigenvalues.maxCoeff()) + "]");
  if (std::abs(s.eigenvalues(0) - 1.0) > 1e-8)
    throw NumericalError("largest eigenvalue " +
                         std::to_string(s.eigenvalues(0)) + " is not 1");
  return s;
}

// P^t = D^-1/2 B max(L,0)^t B^T D^1/2. Entries in [-1e-10, 0) are clamped to
// zero; anything more negative signals an invalid operator. Rows whose sum
// drifts beyond 1e-12 are renormalized.
inline Eigen::MatrixXd fractional_power(const SpectralForm& s, double t) {
  if (!(t > 0.0) || t > 1.0)
    throw DataError("fractional power t must lie in (0, 1]");
  Eigen::VectorXd lam_t(s.n);
  for (int i = 0; i < s.n; ++i) {
    double lam = std::max(s.eigenvalues(i), 0.0);
    lam_t(i) = std::pow(lam, t);
  }
  Eigen::MatrixXd at;
  at.noalias() = s.basis * lam_t.asDiagonal() * s.basis.transpose();
  Eigen::MatrixXd pt = s.d_half_inv.asDiagonal() * at * s.d_half.asDiagonal();
  for (int i = 0; i < s.n; ++i) {
    for (int j = 0; j < s.n; ++j) {
      double v = pt(i, j);
      if (v < 0.0) {
        if (v < -1e-10)
          throw NumericalError("density entry " + std::to_string(v) +
                               " below -1e-10 at (" + std::to_string(i) + "," +
                               std::to_string(j) + ")");
        pt(i, j) = 0.0;
      }
    }
    double sum = pt.row(i).sum();
    if (std::abs(sum - 1.0) > 1e-12) pt.row(i) /= sum;
  }
  return pt;
}

// Propagated densities on the dyadic grid: row i of phi[k] is the density
// after diffusion time 2^-k, psi its entrywise square root.
struct MultiScaleDensities {
  int n = 0;
  int max_scale = 0;
  std::vector<Eigen::MatrixXd> phi;
  std::vector<Eigen::MatrixXd> psi;
};

inline void validate_densities(const MultiScaleDensities& ms) {
  for (int k = 0; k <= ms.max_scale; ++k) {
    const auto& m = ms.phi[k];
    for (int i = 0; i < ms.n; ++i) {
      double sum = m.row(i).sum();
      if (std::abs(sum - 1.0) > 1e-8)
        throw NumericalError("density row sum " + std::to_string(sum) +
                             " at scale " + std::to_string(k));
      if (m.row(i).minCoeff() < 0.0)
        throw NumericalError("negative density at scale " + std::to_string(k));
      if (ms.psi[k].row(i).norm() > 1.0 + 1e-8)
        throw NumericalError("psi row norm exceeds 1 at scale " +
                             std::to_string(k));
    }
  }
}

inline MultiScaleDensities multiscale_densities(const SpectralForm& s, int K) {
  if (K < 0) throw DataError("max scale K must be nonnegative");
  MultiScaleDensities ms;
  ms.n = s.n;
  ms.max_scale = K;
  ms.phi.reserve(K + 1);
  ms.psi.reserve(K + 1);
  for (int k = 0; k <= K; ++k) {
    ms.phi.push_back(fractional_power(s, std::exp2(-k)));
    ms.psi.push_back(ms.phi.back().cwiseSqrt());
  }
  validate_densities(ms);
  return ms;
}

inline constexpr char kDensitiesMagic[8] = {'H', 'D', 'D', 'D', 'E', 'N', '0', '1'};
inline constexpr std::uint32_t kEndianTag = 0x01020304u;

inline void write_densities(const std::string& path,
                            const MultiScaleDensities& ms) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write densities: " + path);
  out.write(kDensitiesMagic, sizeof(kDensitiesMagic));
  std::uint64_t n = static_cast<std::uint64_t>(ms.n);
  std::uint64_t k = static_cast<std::uint64_t>(ms.max_scale);
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&k), sizeof(k));
  out.write(reinterpret_cast<const char*>(&kEndianTag), sizeof(kEndianTag));
  std::vector<double> row(ms.n);
  for (const auto& m : ms.phi) {
    for (int i = 0; i < ms.n; ++i) {
      for (int j = 0; j < ms.n; ++j) row[j] = m(i, j);
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double) * row.size()));
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

inline MultiScaleDensities read_densities(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open densities: " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDensitiesMagic, sizeof(magic)) != 0)
    throw DataError("bad magic in densities file: " + path);
  std::uint64_t n = 0, k = 0;
  std::uint32_t tag = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  in.read(reinterpret_cast<char*>(&tag), sizeof(tag));
  if (!in || n == 0 || n > (1u << 20) || k > 64)
    throw DataError("bad header in densities file: " + path);
  if (tag != kEndianTag)
    throw DataError("densities file endianness mismatch: " + path);
  MultiScaleDensities ms;
  ms.n = static_cast<int>(n);
  ms.max_scale = static_cast<int>(k);
  std::vector<double> row(ms.n);
  for (std::uint64_t s = 0; s <= k; ++s) {
    Eigen::MatrixXd m(ms.n, ms.n);
    for (int i = 0; i < ms.n; ++i) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
      if (!in) throw DataError("truncated densities file: " + path);
      for (int j = 0; j < ms.n; ++j) m(i, j) = row[j];
    }
    ms.psi.push_back(m.cwiseSqrt());
    ms.phi.push_back(std::move(m));
  }
  validate_densities(ms);
  return ms;
}

}  // namespace hdd
