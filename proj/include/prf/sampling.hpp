#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace prf {

/// Data-Sampling-Index table: k bootstrap samples of N row indexes each.
/// Trees read their sample through the table instead of copying rows.
/// Indexes are 64-bit logically; storage narrows to 32 bits when N allows.
class DsiTable {
public:
    /// k rows of N indexes drawn uniformly with replacement. Row t uses the
    /// generator seeded by derive_seed(seed, Stream::kBootstrap, t).
    static DsiTable build(std::uint64_t num_rows, std::uint64_t num_trees, std::uint64_t seed);

    std::uint64_t num_trees() const { return k_; }
    std::uint64_t num_rows() const { return n_; }
    std::uint64_t seed() const { return seed_; }

    std::uint64_t at(std::uint64_t tree, std::uint64_t column) const;
    std::vector<std::uint64_t> row(std::uint64_t tree) const;
    /// How often each of the N rows was drawn for `tree`.
    std::vector<std::uint32_t> multiplicities(std::uint64_t tree) const;

    /// Index cells held (k * N).
    std::uint64_t cell_count() const { return k_ * n_; }
    /// Bytes per stored index (4 or 8).
    std::size_t index_width() const;
    std::uint64_t storage_bytes() const { return cell_count() * index_width(); }

    /// FNV-1a over (k, N, seed, indexes) as 16 hex digits.
    std::string digest() const;

    // Binary layout, little-endian: "PRFDSI01", u64 k, u64 N, u64 seed,
    // then k*N u64 indexes row-major.
    void save(const std::filesystem::path& path) const;
    static DsiTable load(const std::filesystem::path& path);
    std::vector<std::uint8_t> serialize() const;
    static DsiTable deserialize(const std::vector<std::uint8_t>& bytes);

    /// Wraps explicit indexes; validates the range of every cell.
    static DsiTable from_rows(const std::vector<std::vector<std::uint64_t>>& rows, std::uint64_t seed = 0);

    bool operator==(const DsiTable&) const = default;

private:
    std::uint64_t k_ = 0;
    std::uint64_t n_ = 0;
    std::uint64_t seed_ = 0;
    std::variant<std::vector<std::uint32_t>, std::vector<std::uint64_t>> cells_;
};

/// Rows absent from one bootstrap sample.
struct OobSet {
    std::uint64_t tree_index = 0;
    std::vector<std::uint64_t> row_indexes;  // sorted, unique
};

OobSet oob_indices(const DsiTable& table, std::uint64_t tree);

}  // namespace prf
