#include "prf/sampling.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

#include "prf/error.hpp"
#include "prf/random.hpp"

namespace prf {

namespace {

constexpr char kMagic[8] = {'P', 'R', 'F', 'D', 'S', 'I', '0', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t offset) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in[offset + b]) << (8 * b);
    return v;
}

bool fits_u32(std::uint64_t n) { return n <= std::numeric_limits<std::uint32_t>::max(); }

}  // namespace

DsiTable DsiTable::build(std::uint64_t num_rows, std::uint64_t num_trees, std::uint64_t seed) {
    if (num_rows == 0) throw InvalidArgument("DSI table needs N >= 1");
    if (num_trees == 0) throw InvalidArgument("DSI table needs k >= 1");
    DsiTable t;
    t.k_ = num_trees;
    t.n_ = num_rows;
    t.seed_ = seed;
    auto fill = [&](auto& cells) {
        cells.resize(num_trees * num_rows);
        for (std::uint64_t tree = 0; tree < num_trees; ++tree) {
            Rng rng(derive_seed(seed, Stream::kBootstrap, tree));
            auto* row = cells.data() + tree * num_rows;
            for (std::uint64_t c = 0; c < num_rows; ++c) {
                row[c] = static_cast<std::remove_reference_t<decltype(row[c])>>(uniform_below(rng, num_rows));
            }
        }
    };
    if (fits_u32(num_rows)) {
        t.cells_ = std::vector<std::uint32_t>{};
        fill(std::get<0>(t.cells_));
    } else {
        t.cells_ = std::vector<std::uint64_t>{};
        fill(std::get<1>(t.cells_));
    }
    return t;
}

DsiTable DsiTable::from_rows(const std::vector<std::vector<std::uint64_t>>& rows, std::uint64_t seed) {
    if (rows.empty() || rows.front().empty()) throw InvalidArgument("DSI table needs k >= 1 and N >= 1");
    DsiTable t;
    t.k_ = rows.size();
    t.n_ = rows.front().size();
    t.seed_ = seed;
    std::vector<std::uint64_t> cells;
    cells.reserve(t.k_ * t.n_);
    for (const auto& r : rows) {
        if (r.size() != t.n_) throw InvalidArgument("DSI rows must all have N entries");
        for (auto idx : r) {
            if (idx >= t.n_) throw InvalidArgument("DSI index out of range");
            cells.push_back(idx);
        }
    }
    if (fits_u32(t.n_)) {
        t.cells_ = std::vector<std::uint32_t>(cells.begin(), cells.end());
    } else {
        t.cells_ = std::move(cells);
    }
    return t;
}

std::uint64_t DsiTable::at(std::uint64_t tree, std::uint64_t column) const {
    if (tree >= k_ || column >= n_) throw InvalidArgument("DSI cell out of range");
    return std::visit([&](const auto& cells) { return static_cast<std::uint64_t>(cells[tree * n_ + column]); },
                      cells_);
}

std::vector<std::uint64_t> DsiTable::row(std::uint64_t tree) const {
    if (tree >= k_) throw InvalidArgument("tree index " + std::to_string(tree) + " out of range");
    return std::visit(
        [&](const auto& cells) {
            auto first = cells.begin() + static_cast<std::ptrdiff_t>(tree * n_);
            return std::vector<std::uint64_t>(first, first + static_cast<std::ptrdiff_t>(n_));
        },
        cells_);
}

std::vector<std::uint32_t> DsiTable::multiplicities(std::uint64_t tree) const {
    if (tree >= k_) throw InvalidArgument("tree index " + std::to_string(tree) + " out of range");
    std::vector<std::uint32_t> counts(n_, 0);
    std::visit(
        [&](const auto& cells) {
            for (std::uint64_t c = 0; c < n_; ++c) ++counts[cells[tree * n_ + c]];
        },
        cells_);
    return counts;
}

std::size_t DsiTable::index_width() const { return cells_.index() == 0 ? 4 : 8; }

std::string DsiTable::digest() const {
    Fnv1a h;
    h.update_u64(k_);
    h.update_u64(n_);
    h.update_u64(seed_);
    std::visit(
        [&](const auto& cells) {
            for (auto v : cells) h.update_u64(v);
        },
        cells_);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
    return buf;
}

std::vector<std::uint8_t> DsiTable::serialize() const {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(32 + cell_count() * 8);
    put_u64(out, k_);
    put_u64(out, n_);
    put_u64(out, seed_);
    std::visit(
        [&](const auto& cells) {
            for (auto v : cells) put_u64(out, v);
        },
        cells_);
    return out;
}

DsiTable DsiTable::deserialize(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 32 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw DataError("not a DSI table file (bad magic)");
    }
    const auto k = get_u64(bytes, 8);
    const auto n = get_u64(bytes, 16);
    const auto seed = get_u64(bytes, 24);
    if (k == 0 || n == 0 || n > (bytes.size() - 32) / 8 / k || bytes.size() != 32 + k * n * 8) {
        throw DataError("DSI table file is truncated or inconsistent");
    }
    DsiTable t;
    t.k_ = k;
    t.n_ = n;
    t.seed_ = seed;
    auto fill = [&](auto& cells) {
        cells.resize(k * n);
        for (std::uint64_t i = 0; i < k * n; ++i) {
            const auto v = get_u64(bytes, 32 + 8 * i);
            if (v >= n) throw DataError("DSI table file holds an index out of range");
            cells[i] = static_cast<std::remove_reference_t<decltype(cells[i])>>(v);
        }
    };
    if (fits_u32(n)) {
        t.cells_ = std::vector<std::uint32_t>{};
        fill(std::get<0>(t.cells_));
    } else {
        t.cells_ = std::vector<std::uint64_t>{};
        fill(std::get<1>(t.cells_));
    }
    return t;
}

void DsiTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write DSI table to " + path.string());
    const auto bytes = serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DsiTable DsiTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open DSI table " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

OobSet oob_indices(const DsiTable& table, std::uint64_t tree) {
    if (tree >= table.num_trees()) {
        throw InvalidArgument("tree index " + std::to_string(tree) + " out of range (k = " +
                              std::to_string(table.num_trees()) + ")");
    }
    const auto counts = table.multiplicities(tree);
    OobSet oob{tree, {}};
    for (std::uint64_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) oob.row_indexes.push_back(i);
    }
    return oob;
}

}  // namespace prf
