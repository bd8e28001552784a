#include "prf/dataset.hpp"

#include <charconv>
#include <cstring>
#include <type_traits>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "prf/error.hpp"

namespace prf {

const char* to_string(FeatureKind kind) {
    return kind == FeatureKind::kCategorical ? "categorical" : "continuous";
}

FeatureKind feature_kind_from_string(const std::string& text) {
    if (text == "categorical") return FeatureKind::kCategorical;
    if (text == "continuous") return FeatureKind::kContinuous;
    throw InvalidArgument("unknown feature kind '" + text + "'");
}

std::optional<std::size_t> FeatureDescriptor::code_of(const std::string& value) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == value) return i;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Schema

Schema::Schema(std::vector<FeatureDescriptor> inputs, FeatureDescriptor target)
    : columns_(std::move(inputs)) {
    columns_.push_back(std::move(target));
    validate();
}

void Schema::validate() const {
    if (columns_.empty()) throw InvalidArgument("schema has no columns");
    std::set<std::string> names;
    for (const auto& c : columns_) {
        if (c.name.empty()) throw InvalidArgument("schema column with empty name");
        if (!names.insert(c.name).second) {
            throw InvalidArgument("duplicate column name '" + c.name + "'");
        }
        if (c.kind == FeatureKind::kContinuous && !c.values.empty()) {
            throw InvalidArgument("continuous column '" + c.name + "' lists values");
        }
    }
    const auto& t = target();
    if (t.kind == FeatureKind::kCategorical && t.values.empty() && !t.open_vocabulary) {
        throw InvalidArgument("classification target '" + t.name + "' has no classes");
    }
}

namespace {

nlohmann::json descriptor_json(const FeatureDescriptor& d, const char* values_key) {
    nlohmann::json j;
    j["name"] = d.name;
    j["kind"] = to_string(d.kind);
    if (d.kind == FeatureKind::kCategorical) {
        j[values_key] = d.values;
        if (d.open_vocabulary) j["open_vocabulary"] = true;
    }
    return j;
}

FeatureDescriptor descriptor_from_json(const nlohmann::json& j, const char* values_key) {
    FeatureDescriptor d;
    d.name = j.at("name").get<std::string>();
    d.kind = feature_kind_from_string(j.at("kind").get<std::string>());
    if (d.kind == FeatureKind::kCategorical) {
        if (j.contains(values_key)) {
            d.values = j.at(values_key).get<std::vector<std::string>>();
            d.open_vocabulary = j.value("open_vocabulary", false);
        } else {
            d.open_vocabulary = true;
        }
    }
    return d;
}

}  // namespace

nlohmann::json Schema::to_json() const {
    nlohmann::json j;
    j["features"] = nlohmann::json::array();
    for (std::size_t c = 0; c + 1 < columns_.size(); ++c) {
        j["features"].push_back(descriptor_json(columns_[c], "values"));
    }
    j["target"] = descriptor_json(target(), "classes");
    return j;
}

Schema Schema::from_json(const nlohmann::json& j) {
    try {
        std::vector<FeatureDescriptor> inputs;
        for (const auto& f : j.at("features")) inputs.push_back(descriptor_from_json(f, "values"));
        return Schema(std::move(inputs), descriptor_from_json(j.at("target"), "classes"));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed schema: ") + e.what());
    }
}

Schema Schema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open schema file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("schema file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Schema schema, std::vector<double> cells)
    : schema_(std::move(schema)), cells_(std::move(cells)) {
    const auto m = schema_.num_columns();
    if (m == 0 || cells_.size() % m != 0) {
        throw InvalidArgument("cell count is not a multiple of the column count");
    }
    rows_ = cells_.size() / m;
    for (double v : cells_) {
        if (!std::isfinite(v)) throw DataError("dataset contains a non-finite value");
    }
}

Dataset Dataset::with_targets(std::span<const double> targets) const {
    if (targets.size() != rows_) throw InvalidArgument("target count does not match row count");
    auto cells = cells_;
    const auto m = num_columns();
    for (std::size_t i = 0; i < rows_; ++i) cells[i * m + m - 1] = targets[i];
    return Dataset(schema_, std::move(cells));
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::string> split_csv_record(std::istream& in, bool& ok) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        any = true;
        const char c = static_cast<char>(ch);
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            break;
        } else if (c == '\n') {
            break;
        } else {
            field.push_back(c);
        }
    }
    ok = any;
    if (any) fields.push_back(std::move(field));
    return fields;
}

namespace {

bool blank_record(const std::vector<std::string>& fields) {
    return fields.size() == 1 && fields[0].empty();
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    double v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (first == last || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw DataError("row " + std::to_string(row) + ": column '" + column +
                        "' has unparsable number '" + text + "'");
    }
    return v;
}

/// Encodes one field. `extend` controls whether open vocabularies may grow;
/// when false, unknown values of any vocabulary map past its end.
double encode(FeatureDescriptor& d, const std::string& text, std::size_t row, bool extend) {
    if (d.kind == FeatureKind::kContinuous) return parse_number(text, row, d.name);
    if (text.empty()) {
        throw DataError("row " + std::to_string(row) + ": missing value in column '" + d.name + "'");
    }
    if (auto code = d.code_of(text)) return static_cast<double>(*code);
    if (!extend) return static_cast<double>(d.values.size());
    if (!d.open_vocabulary) {
        throw DataError("row " + std::to_string(row) + ": unknown value '" + text +
                        "' in column '" + d.name + "'");
    }
    d.values.push_back(text);
    return static_cast<double>(d.values.size() - 1);
}

std::vector<std::string> read_header(std::istream& in) {
    bool ok = false;
    auto header = split_csv_record(in, ok);
    if (!ok || blank_record(header)) throw DataError("CSV input has no header row");
    return header;
}

}  // namespace

Dataset parse_csv(std::istream& in, const Schema& schema_in) {
    schema_in.validate();
    Schema schema = schema_in;
    const auto header = read_header(in);
    const auto m = schema.num_columns();
    if (header.size() != m) {
        throw SchemaMismatch("header has " + std::to_string(header.size()) +
                             " columns, schema declares " + std::to_string(m));
    }
    for (std::size_t c = 0; c < m; ++c) {
        if (header[c] != schema.column(c).name) {
            throw SchemaMismatch("header column " + std::to_string(c) + " is '" + header[c] +
                                 "', schema expects '" + schema.column(c).name + "'");
        }
    }
    std::vector<double> cells;
    std::size_t row = 0;
    for (;;) {
        bool ok = false;
        auto fields = split_csv_record(in, ok);
        if (!ok) break;
        if (blank_record(fields)) continue;
        ++row;
        if (fields.size() != m) {
            throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(m) +
                            " values, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < m; ++c) {
            cells.push_back(encode(schema.column(c), fields[c], row, true));
        }
    }
    return Dataset(std::move(schema), std::move(cells));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open data file " + path.string());
    return parse_csv(in, schema);
}

SampleSet parse_samples(std::istream& in, const Schema& schema_in) {
    Schema schema = schema_in;
    bool ok = false;
    auto header = split_csv_record(in, ok);
    SampleSet out;
    if (!ok || blank_record(header)) return out;
    const auto inputs = schema.num_inputs();
    const bool with_target = header.size() == schema.num_columns();
    if (!with_target && header.size() != inputs) {
        throw SchemaMismatch("sample header has " + std::to_string(header.size()) +
                             " columns, model expects " + std::to_string(inputs) + " or " +
                             std::to_string(schema.num_columns()));
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] != schema.column(c).name) {
            throw SchemaMismatch("sample column " + std::to_string(c) + " is '" + header[c] +
                                 "', model expects '" + schema.column(c).name + "'");
        }
    }
    if (with_target) out.targets.emplace();
    std::size_t row = 0;
    for (;;) {
        auto fields = split_csv_record(in, ok);
        if (!ok) break;
        if (blank_record(fields)) continue;
        ++row;
        if (fields.size() != header.size()) {
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " values, found " +
                            std::to_string(fields.size()));
        }
        std::vector<double> x(inputs);
        for (std::size_t c = 0; c < inputs; ++c) x[c] = encode(schema.column(c), fields[c], row, false);
        out.features.push_back(std::move(x));
        if (with_target) {
            auto& t = schema.column(schema.target_index());
            const double y = encode(t, fields.back(), row, false);
            if (t.kind == FeatureKind::kCategorical && y >= static_cast<double>(t.values.size())) {
                throw DataError("row " + std::to_string(row) + ": unknown class '" + fields.back() + "'");
            }
            out.targets->push_back(y);
        }
    }
    return out;
}

SampleSet load_samples(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open sample file " + path.string());
    return parse_samples(in, schema);
}

// ---------------------------------------------------------------------------
// Vertical partitioning

std::vector<FeatureSubset> vertical_partition(const Dataset& d) {
    const auto m = d.num_columns();
    if (m < 2) throw InvalidArgument("dataset has no input features (M < 2)");
    std::vector<FeatureSubset> subsets(m - 1);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        auto& fs = subsets[j];
        fs.feature_index = j;
        fs.kind = d.schema().column(j).kind;
        fs.entries.reserve(d.num_rows());
        for (std::size_t i = 0; i < d.num_rows(); ++i) {
            fs.entries.push_back({i, d.at(i, j), d.target(i)});
        }
    }
    return subsets;
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) {
        static_assert(sizeof(double) == 8);
        std::memcpy(&bits, &value, 8);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

}  // namespace

std::vector<std::uint8_t> serialize_subset(const FeatureSubset& fs) {
    std::vector<std::uint8_t> out;
    out.reserve(subset_size_bytes(fs.entries.size()));
    for (char c : {'P', 'R', 'F', 'S'}) out.push_back(static_cast<std::uint8_t>(c));
    put_le(out, static_cast<std::uint32_t>(fs.feature_index));
    put_le(out, static_cast<std::uint8_t>(fs.kind));
    put_le(out, static_cast<std::uint64_t>(fs.entries.size()));
    for (const auto& e : fs.entries) {
        put_le(out, e.row);
        put_le(out, e.value);
        put_le(out, e.target);
    }
    return out;
}

std::uint64_t subset_size_bytes(const FeatureSubset& fs) { return subset_size_bytes(fs.entries.size()); }

std::uint64_t FeatureSubset::size_bytes() const { return subset_size_bytes(*this); }

}  // namespace prf
