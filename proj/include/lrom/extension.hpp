#pragma once

#include "lrom/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace lrom::extension {

/// Bookkeeping between the mu-dependent active space and the fixed
/// background space: which background DOFs are active for this mu, and
/// which of those are free (not constrained by Dirichlet data).
struct ActiveDofMap {
    Index total_dofs = 0;
    std::vector<bool> active;
    std::vector<bool> free;

    Index active_count() const;
    Index free_count() const;
};

ActiveDofMap make_active_dof_map(Index total_dofs, std::vector<bool> active,
                                 std::vector<bool> dirichlet);

/// Zero extension: values on the active DOFs scattered into a background
/// vector, zeros elsewhere. Linear in its input by construction.
Vector extend(const Vector& values_on_active, const ActiveDofMap& map);

/// Picks the active entries of a background vector in index order.
Vector restrict_active(const Vector& extended, const ActiveDofMap& map);

/// Same, but over the free DOFs only.
Vector restrict_free(const Vector& extended, const ActiveDofMap& map);

/// Sorted, duplicate-free set of (row, col) positions with a stable flat
/// indexing. All DEIM matrix snapshots are vectorized through one pattern.
class SparsityPattern {
public:
    SparsityPattern() = default;
    SparsityPattern(Index order, std::vector<std::pair<Index, Index>> entries);

    static SparsityPattern from_matrix(const SparseMatrix& a,
                                       double drop_tol = 0.0);

    Index order() const { return order_; }
    Index size() const { return static_cast<Index>(entries_.size()); }
    const std::vector<std::pair<Index, Index>>& entries() const {
        return entries_;
    }
    std::pair<Index, Index> entry(Index flat) const { return entries_[flat]; }

    /// Flat position of (row, col), or -1 if absent.
    Index find(Index row, Index col) const;

    /// Vectorizes a matrix through the pattern. Entries of `a` outside the
    /// pattern are ignored; if out_of_pattern is non-null their count is
    /// added to it (training-set richness diagnostic).
    Vector vectorize(const SparseMatrix& a,
                     std::int64_t* out_of_pattern = nullptr) const;

    /// Scatters a flat vector back into a sparse matrix over the pattern.
    SparseMatrix scatter(const Vector& values) const;

    bool contains_diagonal() const;

    /// 64-bit FNV-1a over the sorted (row, col) pairs; embedded in model
    /// metadata so loaded artifacts can verify index stability.
    std::uint64_t checksum() const;

private:
    Index order_ = 0;
    std::vector<std::pair<Index, Index>> entries_;
    std::vector<Index> row_ptr_;  // lexicographic order makes rows contiguous

    void build_row_index();
};

SparsityPattern union_pattern(const std::vector<SparsityPattern>& patterns);

}  // namespace lrom::extension
