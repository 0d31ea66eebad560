#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rme/ingest.hpp"

namespace rme::cooccur {

// Ordered co-occurrence pair counts. Pairs are generated in both
// directions, so pair(i,j) == pair(j,i) and sum(marginal) == total.
struct PairCounts {
    std::unordered_map<std::uint64_t, std::int64_t> pair;
    std::vector<std::int64_t> marginal;
    std::int64_t total = 0;

    static std::uint64_t key(std::int32_t i, std::int32_t j) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
               static_cast<std::uint32_t>(j);
    }
    std::int64_t pair_count(std::int32_t i, std::int32_t j) const {
        auto it = pair.find(key(i, j));
        return it == pair.end() ? 0 : it->second;
    }
};

// All ordered pairs from every list: a list of length L contributes
// L*(L-1) pairs. Lists must hold distinct tokens in [0, vocab).
PairCounts generate_pairs(const std::vector<std::vector<std::int32_t>>& lists,
                          std::int32_t vocab);

// log( #(i,j)*|D| / (#(i)*#(j)) ), natural log. Throws Error{Data} when
// the pair was never counted.
double pmi(const PairCounts& counts, std::int32_t i, std::int32_t j);

// Sparse symmetric nonnegative matrix; zeros are structurally absent and
// the diagonal is always empty.
class SppmiMatrix {
public:
    SppmiMatrix() = default;
    SppmiMatrix(std::int32_t dim, double shift);

    std::int32_t dim() const { return dim_; }
    double shift() const { return shift_; }
    std::int64_t nnz() const { return nnz_; }

    // Row entries sorted by column index.
    const std::vector<std::pair<std::int32_t, double>>& row(std::int32_t i) const {
        return rows_[i];
    }

    double at(std::int32_t i, std::int32_t j) const;

    // Inserts v at (i,j) and (j,i). Builder use only; call sort_rows() once done.
    void insert_symmetric(std::int32_t i, std::int32_t j, double v);
    void sort_rows();

private:
    std::int32_t dim_ = 0;
    double shift_ = 1.0;
    std::int64_t nnz_ = 0;
    std::vector<std::vector<std::pair<std::int32_t, double>>> rows_;
};

// entry(i,j) = max(pmi(i,j) - log s, 0) for every counted pair; exact
// zeros are dropped. s >= 1 expected (smaller s densifies the matrix).
SppmiMatrix build_sppmi(const PairCounts& counts, double s);

// Per-user liked-item lists -> pairs -> SPPMI, dimension n x n.
SppmiMatrix build_x(const ingest::InteractionMatrix& train, double s);
// Same over per-user disliked-item lists.
SppmiMatrix build_y(const ingest::InteractionMatrix& train, double s);
// Supplied per-user disliked lists (implicit feedback path).
SppmiMatrix build_y_from_lists(const std::vector<std::vector<std::int32_t>>& disliked,
                               std::int32_t n_items, double s);
// Per-item liked-user lists, dimension m x m.
SppmiMatrix build_z(const ingest::InteractionMatrix& train, double s);

// Text dump: header "# sppmi dim=<n> s=<s>", then "i<TAB>j<TAB>value"
// sorted by (i,j).
void dump_sppmi(const SppmiMatrix& mat, std::ostream& out);
void dump_sppmi_file(const SppmiMatrix& mat, const std::string& path);
SppmiMatrix load_sppmi_file(const std::string& path);

}  // namespace rme::cooccur
