#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hdd/errors.hpp"

namespace hdd {

struct DistanceMatrix {
  int n = 0;
  Eigen::MatrixXd d;
};

inline void validate_distance_matrix(const DistanceMatrix& dm) {
  if (dm.n <= 0 || dm.d.rows() != dm.n || dm.d.cols() != dm.n)
    throw DataError("distance matrix has inconsistent size");
  for (int i = 0; i < dm.n; ++i) {
    if (dm.d(i, i) != 0.0)
      throw DataError("distance matrix diagonal not zero at row " +
                      std::to_string(i));
    for (int j = 0; j < dm.n; ++j) {
      double v = dm.d(i, j);
      if (!std::isfinite(v) || v < 0.0)
        throw DataError("distance matrix entry (" + std::to_string(i) + "," +
                        std::to_string(j) + ") invalid");
      if (dm.d(i, j) != dm.d(j, i))
        throw DataError("distance matrix asymmetric at (" + std::to_string(i) +
                        "," + std::to_string(j) + ")");
    }
  }
}

// Builds a DistanceMatrix from an upper triangle already stored in m,
// mirroring so symmetry holds bit-exactly.
inline DistanceMatrix mirror_upper(Eigen::MatrixXd m) {
  DistanceMatrix dm;
  dm.n = static_cast<int>(m.rows());
  for (int i = 0; i < dm.n; ++i) {
    m(i, i) = 0.0;
    for (int j = i + 1; j < dm.n; ++j) m(j, i) = m(i, j);
  }
  dm.d = std::move(m);
  return dm;
}

inline void write_distance_csv(const std::string& path, const DistanceMatrix& dm) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write distance matrix: " + path);
  char buf[32];
  for (int i = 0; i < dm.n; ++i) {
    for (int j = 0; j < dm.n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", dm.d(i, j));
      out << buf << (j + 1 == dm.n ? '\n' : ',');
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

inline constexpr char kDistanceMagic[8] = {'H', 'D', 'D', 'M', 'A', 'T', '0', '1'};

inline void write_distance_binary(const std::string& path,
                                  const DistanceMatrix& dm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write distance matrix: " + path);
  out.write(kDistanceMagic, sizeof(kDistanceMagic));
  std::uint64_t n = static_cast<std::uint64_t>(dm.n);
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  std::vector<double> row(dm.n);
  for (int i = 0; i < dm.n; ++i) {
    for (int j = 0; j < dm.n; ++j) row[j] = dm.d(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
  if (!out) throw DataError("write failed: " + path);
}

inline bool has_distance_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  return in && std::memcmp(magic, kDistanceMagic, sizeof(magic)) == 0;
}

inline DistanceMatrix read_distance_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open distance matrix: " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDistanceMagic, sizeof(magic)) != 0)
    throw DataError("bad magic in distance file: " + path);
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n == 0 || n > (1u << 20))
    throw DataError("bad size in distance file: " + path);
  DistanceMatrix dm;
  dm.n = static_cast<int>(n);
  dm.d.resize(dm.n, dm.n);
  std::vector<double> row(dm.n);
  for (int i = 0; i < dm.n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * row.size()));
    if (!in) throw DataError("truncated distance file: " + path);
    for (int j = 0; j < dm.n; ++j) dm.d(i, j) = row[j];
  }
  validate_distance_matrix(dm);
  return dm;
}

inline DistanceMatrix read_distance_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open distance matrix: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    size_t start = 0;
    while (start <= line.size()) {
      size_t comma = line.find(',', start);
      std::string cell = line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      size_t pos = 0;
      double v = 0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0)
        throw DataError("non-numeric cell at line " + std::to_string(lineno) +
                        ", column " + std::to_string(row.size() + 1));
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty distance matrix file: " + path);
  int n = static_cast<int>(rows.size());
  DistanceMatrix dm;
  dm.n = n;
  dm.d.resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw DataError("distance matrix row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].size()) + " columns, expected " +
                      std::to_string(n));
    for (int j = 0; j < n; ++j) dm.d(i, j) = rows[i][j];
  }
  validate_distance_matrix(dm);
  return dm;
}

// Sniffs binary vs CSV by the magic header.
inline DistanceMatrix read_distance_auto(const std::string& path) {
  return has_distance_magic(path) ? read_distance_binary(path)
                                  : read_distance_csv(path);
}

}  // namespace hdd
