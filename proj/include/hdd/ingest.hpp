#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "hdd/distance_matrix.hpp"
#include "hdd/errors.hpp"

namespace hdd {

struct FeatureMatrix {
  int n_points = 0;
  int n_features = 0;
  Eigen::MatrixXd values;
};

struct LabelVector {
  std::vector<std::string> labels;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  size_t start = 0;
  while (start <= line.size()) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r')
    cells.back().pop_back();
  return cells;
}

}  // namespace detail

inline FeatureMatrix read_feature_matrix(const std::string& path,
                                         bool has_header = false) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature matrix: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool skipped_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (has_header && !skipped_header) {
      skipped_header = true;
      continue;
    }
    auto cells = detail::split_csv_line(line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
      size_t pos = 0;
      double v = 0;
      try {
        v = std::stod(cells[c], &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != cells[c].size() || !std::isfinite(v))
        throw DataError("non-numeric cell at row " + std::to_string(lineno) +
                        ", column " + std::to_string(c + 1));
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("ragged row at line " + std::to_string(lineno) + ": " +
                      std::to_string(row.size()) + " cells, expected " +
                      std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("feature matrix file is empty: " + path);
  FeatureMatrix fm;
  fm.n_points = static_cast<int>(rows.size());
  fm.n_features = static_cast<int>(rows.front().size());
  if (fm.n_points < 2) throw DataError("feature matrix needs at least 2 points");
  fm.values.resize(fm.n_points, fm.n_features);
  for (int i = 0; i < fm.n_points; ++i)
    for (int j = 0; j < fm.n_features; ++j) fm.values(i, j) = rows[i][j];
  return fm;
}

// Single-column CSV, one label per line, aligned to node/point order.
inline LabelVector read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels: " + path);
  LabelVector lv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lv.labels.push_back(line);
  }
  if (lv.labels.empty()) throw DataError("label file is empty: " + path);
  return lv;
}

inline void require_classifiable(const LabelVector& lv) {
  std::unordered_set<std::string> classes(lv.labels.begin(), lv.labels.end());
  if (classes.size() < 2)
    throw DataError("classification needs at least 2 distinct classes, got " +
                    std::to_string(classes.size()));
}

enum class Metric { cosine, euclidean };

enum class CosineForm { one_minus_cos, arccos };

// Cosine distance defaults to 1 - cos similarity; the arccos form is kept as
// a config option because either convention fits the ambient-distance role.
inline DistanceMatrix pairwise_distances(const FeatureMatrix& fm, Metric metric,
                                         CosineForm form = CosineForm::one_minus_cos) {
  int n = fm.n_points;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  if (metric == Metric::cosine) {
    Eigen::VectorXd norms(n);
    for (int i = 0; i < n; ++i) {
      norms(i) = fm.values.row(i).norm();
      if (norms(i) == 0.0)
        throw DataError("zero-norm row " + std::to_string(i) +
                        " under cosine metric");
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double c = fm.values.row(i).dot(fm.values.row(j)) / (norms(i) * norms(j));
        c = std::min(1.0, std::max(-1.0, c));
        d(i, j) = form == CosineForm::one_minus_cos ? 1.0 - c : std::acos(c);
      }
    }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        d(i, j) = (fm.values.row(i) - fm.values.row(j)).norm();
  }
  DistanceMatrix dm = mirror_upper(std::move(d));
  validate_distance_matrix(dm);
  return dm;
}

}  // namespace hdd
