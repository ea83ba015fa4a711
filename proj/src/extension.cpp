#include "lrom/extension.hpp"

#include <algorithm>
#include <string>

namespace lrom::extension {

Index ActiveDofMap::active_count() const {
    return static_cast<Index>(std::count(active.begin(), active.end(), true));
}

Index ActiveDofMap::free_count() const {
    return static_cast<Index>(std::count(free.begin(), free.end(), true));
}

ActiveDofMap make_active_dof_map(Index total_dofs, std::vector<bool> active,
                                 std::vector<bool> dirichlet) {
    if (static_cast<Index>(active.size()) != total_dofs ||
        static_cast<Index>(dirichlet.size()) != total_dofs) {
        throw config_error("active dof map: flag length mismatch");
    }
    ActiveDofMap map;
    map.total_dofs = total_dofs;
    map.active = std::move(active);
    map.free.resize(total_dofs);
    for (Index i = 0; i < total_dofs; ++i) {
        map.free[i] = map.active[i] && !dirichlet[i];
    }
    return map;
}

Vector extend(const Vector& values_on_active, const ActiveDofMap& map) {
    if (values_on_active.size() != map.active_count()) {
        throw config_error("extend: input length " +
                           std::to_string(values_on_active.size()) +
                           " != active count " +
                           std::to_string(map.active_count()));
    }
    Vector out = Vector::Zero(map.total_dofs);
    Index k = 0;
    for (Index i = 0; i < map.total_dofs; ++i) {
        if (map.active[i]) out[i] = values_on_active[k++];
    }
    return out;
}

namespace {
Vector pick(const Vector& extended, const std::vector<bool>& flags,
            Index total) {
    if (extended.size() != total) {
        throw config_error("restrict: input length mismatch");
    }
    Index n = static_cast<Index>(std::count(flags.begin(), flags.end(), true));
    Vector out(n);
    Index k = 0;
    for (Index i = 0; i < total; ++i) {
        if (flags[i]) out[k++] = extended[i];
    }
    return out;
}
}  // namespace

Vector restrict_active(const Vector& extended, const ActiveDofMap& map) {
    return pick(extended, map.active, map.total_dofs);
}

Vector restrict_free(const Vector& extended, const ActiveDofMap& map) {
    return pick(extended, map.free, map.total_dofs);
}

SparsityPattern::SparsityPattern(
    Index order, std::vector<std::pair<Index, Index>> entries)
    : order_(order), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end());
    entries_.erase(std::unique(entries_.begin(), entries_.end()),
                   entries_.end());
    build_row_index();
}

SparsityPattern SparsityPattern::from_matrix(const SparseMatrix& a,
                                             double drop_tol) {
    std::vector<std::pair<Index, Index>> entries;
    entries.reserve(a.nonZeros());
    for (Index k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            if (std::abs(it.value()) > drop_tol || it.row() == it.col()) {
                entries.emplace_back(it.row(), it.col());
            }
        }
    }
    return SparsityPattern(a.rows(), std::move(entries));
}

void SparsityPattern::build_row_index() {
    row_ptr_.assign(order_ + 1, 0);
    for (const auto& [r, c] : entries_) {
        (void)c;
        ++row_ptr_[r + 1];
    }
    for (Index r = 0; r < order_; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

Index SparsityPattern::find(Index row, Index col) const {
    if (row < 0 || row >= order_) return -1;
    const auto begin = entries_.begin() + row_ptr_[row];
    const auto end = entries_.begin() + row_ptr_[row + 1];
    const auto it = std::lower_bound(begin, end, std::make_pair(row, col));
    if (it == end || it->second != col) return -1;
    return static_cast<Index>(it - entries_.begin());
}

Vector SparsityPattern::vectorize(const SparseMatrix& a,
                                  std::int64_t* out_of_pattern) const {
    Vector out = Vector::Zero(size());
    for (Index k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            if (it.value() == 0.0) continue;
            const Index flat = find(it.row(), it.col());
            if (flat >= 0) {
                out[flat] = it.value();
            } else if (out_of_pattern != nullptr) {
                ++(*out_of_pattern);
            }
        }
    }
    return out;
}

SparseMatrix SparsityPattern::scatter(const Vector& values) const {
    if (values.size() != size()) {
        throw config_error("pattern scatter: length mismatch");
    }
    std::vector<Triplet> trips;
    trips.reserve(entries_.size());
    for (Index k = 0; k < size(); ++k) {
        trips.emplace_back(entries_[k].first, entries_[k].second, values[k]);
    }
    SparseMatrix out(order_, order_);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

bool SparsityPattern::contains_diagonal() const {
    for (Index i = 0; i < order_; ++i) {
        if (find(i, i) < 0) return false;
    }
    return true;
}

std::uint64_t SparsityPattern::checksum() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto feed = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFFULL;
            h *= 1099511628211ULL;
        }
    };
    feed(static_cast<std::uint64_t>(order_));
    for (const auto& [r, c] : entries_) {
        feed(static_cast<std::uint64_t>(r));
        feed(static_cast<std::uint64_t>(c));
    }
    return h;
}

SparsityPattern union_pattern(const std::vector<SparsityPattern>& patterns) {
    if (patterns.empty()) return SparsityPattern();
    const Index order = patterns.front().order();
    std::vector<std::pair<Index, Index>> entries;
    for (const SparsityPattern& p : patterns) {
        if (p.order() != order) {
            throw config_error("union_pattern: mixed matrix orders");
        }
        entries.insert(entries.end(), p.entries().begin(), p.entries().end());
    }
    return SparsityPattern(order, std::move(entries));
}

}  // namespace lrom::extension
