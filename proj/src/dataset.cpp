#include "mlbalance/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "mlbalance/error.hpp"
#include "mlbalance/random.hpp"

namespace mlbalance {
namespace {

std::vector<std::string> numbered_names(std::string_view prefix, Index count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (Index i = 1; i <= count; ++i) names.push_back(std::string(prefix) + std::to_string(i));
  return names;
}

void check_unique(const std::vector<std::string>& names, std::string_view what) {
  std::unordered_set<std::string> seen;
  for (const auto& name : names) {
    if (!seen.insert(name).second) {
      throw SchemaError("duplicate " + std::string(what) + " name '" + name + "'");
    }
  }
}

}  // namespace

MultiLabelDataset::MultiLabelDataset(Matrix features, LabelMatrix labels,
                                     std::vector<std::string> feature_names,
                                     std::vector<std::string> label_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      label_names_(std::move(label_names)) {
  if (features_.rows() < 1) throw SchemaError("dataset needs at least one instance");
  if (features_.rows() != labels_.rows()) {
    throw DimensionError("feature rows (" + std::to_string(features_.rows()) +
                         ") != label rows (" + std::to_string(labels_.rows()) + ")");
  }
  if (features_.cols() < 1) throw SchemaError("dataset needs at least one feature column");
  if (labels_.cols() < 1) throw SchemaError("dataset needs at least one label column");
  if (static_cast<Index>(feature_names_.size()) != features_.cols()) {
    throw SchemaError("feature name count does not match feature columns");
  }
  if (static_cast<Index>(label_names_.size()) != labels_.cols()) {
    throw SchemaError("label name count does not match label columns");
  }
  check_unique(feature_names_, "feature");
  check_unique(label_names_, "label");
  if (!features_.allFinite()) throw ValidationError("feature matrix contains NaN or infinity");
  for (Index i = 0; i < labels_.rows(); ++i) {
    for (Index j = 0; j < labels_.cols(); ++j) {
      const int v = labels_(i, j);
      if (v != 0 && v != 1) {
        throw ValidationError("label value " + std::to_string(v) + " at row " +
                              std::to_string(i + 1) + ", label '" + label_names_[j] +
                              "' is not 0 or 1");
      }
    }
  }
}

MultiLabelDataset::MultiLabelDataset(Matrix features, LabelMatrix labels)
    : MultiLabelDataset(features, labels, numbered_names("f", features.cols()),
                        numbered_names("L", labels.cols())) {}

MultiLabelDataset MultiLabelDataset::select_rows(const std::vector<std::size_t>& rows) const {
  Matrix x(static_cast<Index>(rows.size()), num_features());
  LabelMatrix y(static_cast<Index>(rows.size()), num_labels());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= static_cast<std::size_t>(num_instances())) {
      throw DimensionError("row index " + std::to_string(rows[r]) + " out of range");
    }
    x.row(static_cast<Index>(r)) = features_.row(static_cast<Index>(rows[r]));
    y.row(static_cast<Index>(r)) = labels_.row(static_cast<Index>(rows[r]));
  }
  return MultiLabelDataset(std::move(x), std::move(y), feature_names_, label_names_);
}

MultiLabelDataset MultiLabelDataset::with_features(Matrix features) const {
  if (features.rows() != num_instances() || features.cols() != num_features()) {
    throw DimensionError("replacement feature matrix has the wrong shape");
  }
  return MultiLabelDataset(std::move(features), labels_, feature_names_, label_names_);
}

bool MultiLabelDataset::same_schema(const MultiLabelDataset& other) const {
  return feature_names_ == other.feature_names_ && label_names_ == other.label_names_;
}

bool operator==(const MultiLabelDataset& a, const MultiLabelDataset& b) {
  return a.same_schema(b) && a.features_.rows() == b.features_.rows() &&
         a.features_ == b.features_ && a.labels_ == b.labels_;
}

DatasetSplit split(const MultiLabelDataset& dataset, double validation_fraction,
                   double test_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0.0) || !(test_fraction >= 0.0) ||
      !(validation_fraction + test_fraction < 1.0)) {
    throw ConfigError("split fractions must satisfy 0 <= validation + test < 1");
  }
  const auto n = static_cast<std::size_t>(dataset.num_instances());
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * n));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * n));
  if (n_val == 0) throw ConfigError("validation split would be empty");
  if (n_val + n_test >= n) throw ConfigError("training split would be empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                  order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  auto val_rows = take(0, n_val);
  auto test_rows = take(n_val, n_val + n_test);
  auto train_rows = take(n_val + n_test, n);

  std::optional<MultiLabelDataset> test;
  if (!test_rows.empty()) test = dataset.select_rows(test_rows);
  return DatasetSplit{dataset.select_rows(train_rows), dataset.select_rows(val_rows),
                      std::move(test),                 std::move(train_rows),
                      std::move(val_rows),             std::move(test_rows)};
}

FeatureScaler::FeatureScaler(Vector min, Vector max) : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw DimensionError("scaler min/max lengths differ");
  for (Index j = 0; j < min_.size(); ++j) {
    if (!(max_[j] >= min_[j])) throw ValidationError("scaler max below min for a feature");
  }
}

FeatureScaler FeatureScaler::fit(const Matrix& features) {
  return FeatureScaler(features.colwise().minCoeff().transpose(),
                       features.colwise().maxCoeff().transpose());
}

FeatureScaler FeatureScaler::identity(Index num_features) {
  return FeatureScaler(Vector::Zero(num_features), Vector::Ones(num_features));
}

Matrix FeatureScaler::transform(const Matrix& features) const {
  if (features.cols() != size()) throw DimensionError("scaler width does not match features");
  Matrix out(features.rows(), features.cols());
  for (Index j = 0; j < features.cols(); ++j) {
    const double range = max_[j] - min_[j];
    if (range > 0.0) {
      out.col(j) = (features.col(j).array() - min_[j]) / range;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Matrix FeatureScaler::inverse_transform(const Matrix& scaled) const {
  if (scaled.cols() != size()) throw DimensionError("scaler width does not match features");
  Matrix out(scaled.rows(), scaled.cols());
  for (Index j = 0; j < scaled.cols(); ++j) {
    out.col(j) = scaled.col(j).array() * (max_[j] - min_[j]) + min_[j];
  }
  return out;
}

Vector FeatureScaler::inverse_transform_row(const Vector& scaled) const {
  if (scaled.size() != size()) throw DimensionError("scaler width does not match features");
  return (scaled.array() * (max_ - min_).array() + min_.array()).matrix();
}

MultiLabelDataset FeatureScaler::transform(const MultiLabelDataset& dataset) const {
  return dataset.with_features(transform(dataset.features()));
}

std::pair<MultiLabelDataset, FeatureScaler> normalize_features(const MultiLabelDataset& dataset) {
  FeatureScaler scaler = FeatureScaler::fit(dataset.features());
  return {scaler.transform(dataset), std::move(scaler)};
}

DatasetFormat parse_format(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "arff") return DatasetFormat::kArff;
  if (lower == "csv") return DatasetFormat::kCsv;
  throw ConfigError("unknown dataset format '" + std::string(name) + "' (expected arff or csv)");
}

std::string_view format_name(DatasetFormat format) {
  return format == DatasetFormat::kArff ? "arff" : "csv";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("failed writing file '" + path + "'");
}

}  // namespace mlbalance
