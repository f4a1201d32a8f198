#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mlbalance {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using LabelMatrix = Eigen::MatrixXi;
using LabelVector = Eigen::VectorXi;
using Index = Eigen::Index;

/// Feature matrix X (n x d, one row per instance) paired with a binary label matrix Y (n x q).
///
/// The constructor enforces every invariant: Y entries are 0 or 1, n >= 1, d >= 1, q >= 1,
/// X is finite, and names match the column counts and are unique. Instances are immutable
/// afterwards and safe to share across threads for reads.
class MultiLabelDataset {
 public:
  MultiLabelDataset(Matrix features, LabelMatrix labels, std::vector<std::string> feature_names,
                    std::vector<std::string> label_names);

  /// Convenience constructor generating names "f1".."fd" and "L1".."Lq".
  MultiLabelDataset(Matrix features, LabelMatrix labels);

  const Matrix& features() const { return features_; }
  const LabelMatrix& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& label_names() const { return label_names_; }

  Index num_instances() const { return features_.rows(); }
  Index num_features() const { return features_.cols(); }
  Index num_labels() const { return labels_.cols(); }

  /// Rows at the given indices, in the given order (repeats allowed).
  MultiLabelDataset select_rows(const std::vector<std::size_t>& rows) const;

  /// Same schema, new contents.
  MultiLabelDataset with_features(Matrix features) const;

  bool same_schema(const MultiLabelDataset& other) const;

  friend bool operator==(const MultiLabelDataset& a, const MultiLabelDataset& b);

 private:
  Matrix features_;
  LabelMatrix labels_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> label_names_;
};

struct DatasetSplit {
  MultiLabelDataset train;
  MultiLabelDataset validation;
  std::optional<MultiLabelDataset> test;
  // Row indices into the source dataset, ascending.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  std::vector<std::size_t> test_rows;
};

/// Seeded uniform random partition. Held-out sizes are round(n * fraction), halves rounding
/// toward the held-out split. Requires 0 <= validation + test < 1 and a non-empty validation.
DatasetSplit split(const MultiLabelDataset& dataset, double validation_fraction,
                   double test_fraction, std::uint64_t seed);

/// Per-feature min-max scaling onto [0, 1]. Constant columns map to 0.
class FeatureScaler {
 public:
  FeatureScaler() = default;
  FeatureScaler(Vector min, Vector max);

  static FeatureScaler fit(const Matrix& features);
  /// min 0, max 1 for every column: transform and inverse are the identity.
  static FeatureScaler identity(Index num_features);

  const Vector& min() const { return min_; }
  const Vector& max() const { return max_; }
  Index size() const { return min_.size(); }

  /// Works on n x d matrices (rows are instances).
  Matrix transform(const Matrix& features) const;
  Matrix inverse_transform(const Matrix& scaled) const;
  Vector inverse_transform_row(const Vector& scaled) const;

  MultiLabelDataset transform(const MultiLabelDataset& dataset) const;

 private:
  Vector min_;
  Vector max_;
};

/// Fits a scaler on `dataset` and returns the scaled copy alongside it.
std::pair<MultiLabelDataset, FeatureScaler> normalize_features(const MultiLabelDataset& dataset);

enum class DatasetFormat { kArff, kCsv };

DatasetFormat parse_format(std::string_view name);
std::string_view format_name(DatasetFormat format);

/// ARFF reader. Attributes named in `label_names` become label columns in that order; all
/// others become features in declaration order. Dense and sparse rows are accepted.
MultiLabelDataset parse_arff(std::string_view text, const std::vector<std::string>& label_names);

/// Dense CSV reader: header row, the last `label_count` columns are labels.
MultiLabelDataset parse_dense_csv(std::string_view text, Index label_count);

/// Top-level `label` element names of a MULAN XML labels file, in document order.
std::vector<std::string> parse_mulan_labels_xml(std::string_view text);
std::string write_mulan_labels_xml(const std::vector<std::string>& label_names);

/// ARFF output puts features first, labels last as {0,1} attributes. Features are written
/// with 17 significant digits so a re-parse restores every double exactly.
std::string write_dataset(const MultiLabelDataset& dataset, DatasetFormat format,
                          std::string_view relation = "mlbalance");

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace mlbalance
