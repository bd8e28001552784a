#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace prf {

enum class FeatureKind : std::uint8_t { kCategorical = 0, kContinuous = 1 };

const char* to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& text);

/// One column of the table. Categorical values are stored as their index in
/// `values`; an open vocabulary grows as new values are seen at load time.
struct FeatureDescriptor {
    std::string name;
    FeatureKind kind = FeatureKind::kCategorical;
    std::vector<std::string> values;
    bool open_vocabulary = false;

    std::optional<std::size_t> code_of(const std::string& value) const;
    bool operator==(const FeatureDescriptor&) const = default;
};

/// Column layout of a table. The target is always the last column; a
/// categorical target makes a classification problem whose class labels are
/// its values, a continuous target makes a regression problem.
class Schema {
public:
    Schema() = default;
    Schema(std::vector<FeatureDescriptor> inputs, FeatureDescriptor target);

    std::size_t num_columns() const { return columns_.size(); }
    std::size_t num_inputs() const { return columns_.empty() ? 0 : columns_.size() - 1; }
    std::size_t target_index() const { return columns_.size() - 1; }

    const FeatureDescriptor& column(std::size_t j) const { return columns_.at(j); }
    FeatureDescriptor& column(std::size_t j) { return columns_.at(j); }
    const FeatureDescriptor& target() const { return columns_.back(); }
    const std::vector<FeatureDescriptor>& columns() const { return columns_; }

    bool is_regression() const { return target().kind == FeatureKind::kContinuous; }
    const std::vector<std::string>& class_labels() const { return target().values; }
    std::size_t num_classes() const { return is_regression() ? 0 : target().values.size(); }

    /// Throws InvalidArgument when names repeat or a closed classification
    /// target lists no classes.
    void validate() const;

    nlohmann::json to_json() const;
    static Schema from_json(const nlohmann::json& j);
    static Schema load(const std::filesystem::path& path);

    bool operator==(const Schema&) const = default;

private:
    std::vector<FeatureDescriptor> columns_;
};

/// Row-major table of encoded values: category codes or finite numbers.
class Dataset {
public:
    Dataset() = default;
    Dataset(Schema schema, std::vector<double> cells);

    const Schema& schema() const { return schema_; }
    std::size_t num_rows() const { return rows_; }
    std::size_t num_columns() const { return schema_.num_columns(); }

    double at(std::size_t row, std::size_t col) const { return cells_[row * num_columns() + col]; }
    std::span<const double> row(std::size_t i) const {
        return {cells_.data() + i * num_columns(), num_columns()};
    }
    /// Input features of row i (every column but the target).
    std::span<const double> features(std::size_t i) const { return row(i).first(num_columns() - 1); }
    double target(std::size_t i) const { return at(i, schema_.target_index()); }
    const std::vector<double>& cells() const { return cells_; }

    /// Copy with the target column replaced.
    Dataset with_targets(std::span<const double> targets) const;

    bool operator==(const Dataset&) const = default;

private:
    Schema schema_;
    std::vector<double> cells_;
    std::size_t rows_ = 0;
};

/// Parses an RFC-4180 CSV stream whose header names the schema's columns in
/// order. Returns the dataset; open vocabularies in its schema are extended
/// with values seen in the data.
Dataset parse_csv(std::istream& in, const Schema& schema);
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

/// Samples to predict: input features only, plus targets if the file has
/// the target column. Unknown categories are encoded past the end of the
/// vocabulary so trees can route them to their majority child.
struct SampleSet {
    std::vector<std::vector<double>> features;
    std::optional<std::vector<double>> targets;
};
SampleSet parse_samples(std::istream& in, const Schema& schema);
SampleSet load_samples(const std::filesystem::path& path, const Schema& schema);

/// Splits one CSV record; exposed for tests.
std::vector<std::string> split_csv_record(std::istream& in, bool& ok);

struct SubsetEntry {
    std::uint64_t row;
    double value;
    double target;
    bool operator==(const SubsetEntry&) const = default;
};

/// One input column paired with the target column, in row order.
struct FeatureSubset {
    std::size_t feature_index = 0;
    FeatureKind kind = FeatureKind::kCategorical;
    std::vector<SubsetEntry> entries;

    std::uint64_t size_bytes() const;
    bool operator==(const FeatureSubset&) const = default;
};

/// Splits d into its M-1 feature subsets. Throws InvalidArgument if the
/// schema has no input column.
std::vector<FeatureSubset> vertical_partition(const Dataset& d);

// Serialized layout (little-endian): "PRFS", u32 feature index, u8 kind,
// u64 entry count, then per entry u64 row, f64 value, f64 target.
inline constexpr std::uint64_t kSubsetHeaderBytes = 4 + 4 + 1 + 8;
inline constexpr std::uint64_t kSubsetEntryBytes = 8 + 8 + 8;

std::vector<std::uint8_t> serialize_subset(const FeatureSubset& fs);
std::uint64_t subset_size_bytes(const FeatureSubset& fs);
/// Size of a subset with `rows` entries, without materializing it.
constexpr std::uint64_t subset_size_bytes(std::uint64_t rows) {
    return kSubsetHeaderBytes + kSubsetEntryBytes * rows;
}

}  // namespace prf
