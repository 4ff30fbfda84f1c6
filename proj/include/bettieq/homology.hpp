#pragma once

// Persistent homology over F2 by boundary-matrix column reduction.
//
// Two reductions are provided.  `Reduction::Standard` is the textbook
// left-to-right algorithm and serves as the reference.  `Reduction::Twist`
// processes dimensions from the top down and clears the column of every
// simplex that is found to be a pivot (Chen-Kerber); it produces the same
// pairing and is the default.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "bettieq/error.hpp"
#include "bettieq/geom.hpp"
#include "bettieq/io.hpp"

namespace bettieq {

inline constexpr double kInfiniteDeath = std::numeric_limits<double>::infinity();

struct Interval {
    double birth;
    double death; // kInfiniteDeath when never killed within r_max

    bool operator==(const Interval&) const = default;
};

class PersistenceDiagram {
public:
    PersistenceDiagram() = default;
    PersistenceDiagram(int k_max, double r_max) : intervals_(static_cast<std::size_t>(k_max) + 1), r_max_(r_max) {}

    int k_max() const { return static_cast<int>(intervals_.size()) - 1; }
    double r_max() const { return r_max_; }

    const std::vector<Interval>& degree(int k) const
    {
        if (k < 0 || k > k_max())
            fail(ErrorKind::InvalidInput, "degree " + std::to_string(k) + " not in diagram");
        return intervals_[static_cast<std::size_t>(k)];
    }

    void add(int k, Interval iv) { intervals_[static_cast<std::size_t>(k)].push_back(iv); }

    void canonicalize()
    {
        for (auto& v : intervals_)
            std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) {
                return a.birth != b.birth ? a.birth < b.birth : a.death < b.death;
            });
    }

    bool operator==(const PersistenceDiagram&) const = default;

private:
    std::vector<std::vector<Interval>> intervals_;
    double r_max_ = 0.0;
};

using Column = std::vector<std::uint32_t>;

/// Boundary columns in filtration order; entries are filtration indices of
/// the facets, sorted increasingly.  Columns for simplices of dimension
/// above `dim_limit` are left empty.
inline std::vector<Column> boundary_matrix(const Filtration& f, int dim_limit)
{
    const std::size_t n = f.simplices.size();
    std::vector<std::vector<std::pair<Simplex, std::uint32_t>>> by_dim(static_cast<std::size_t>(f.dim_max) + 1);
    for (std::uint32_t i = 0; i < n; ++i) {
        const Simplex& s = f.simplices[i];
        if (s.dim() <= dim_limit)
            by_dim[static_cast<std::size_t>(s.dim())].push_back({s, i});
    }
    for (auto& v : by_dim)
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return vertices_less(a.first, b.first); });

    std::vector<Column> cols(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const Simplex& s = f.simplices[i];
        if (s.count < 2 || s.dim() > dim_limit)
            continue;
        const auto& lower = by_dim[static_cast<std::size_t>(s.dim() - 1)];
        Column& col = cols[i];
        col.reserve(s.count);
        for (std::uint32_t skip = 0; skip < s.count; ++skip) {
            Simplex face;
            for (std::uint32_t a = 0; a < s.count; ++a)
                if (a != skip)
                    face.vertex[face.count++] = s.vertex[a];
            auto it = std::lower_bound(lower.begin(), lower.end(), face,
                                       [](const auto& e, const Simplex& key) { return vertices_less(e.first, key); });
            if (it == lower.end() || !std::equal(face.vertex.begin(), face.vertex.begin() + face.count,
                                                 it->first.vertex.begin()))
                fail(ErrorKind::InvalidInput, "filtration is missing a face");
            if (it->second >= i)
                fail(ErrorKind::InvalidInput, "face appears after its coface in the filtration");
            col.push_back(it->second);
        }
        std::sort(col.begin(), col.end());
    }
    return cols;
}

namespace detail {

inline constexpr std::uint32_t kNoPivot = std::numeric_limits<std::uint32_t>::max();

// a <- a + b over F2 for sorted index lists.
inline void add_column(Column& a, const Column& b, Column& scratch)
{
    scratch.clear();
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(scratch));
    a.swap(scratch);
}

// Returns low(j) -> j pairs as `pivot_of[i] = j` (kNoPivot if i is not a pivot).
inline std::vector<std::uint32_t> reduce_standard(std::vector<Column>& cols)
{
    const std::size_t n = cols.size();
    std::vector<std::uint32_t> pivot_of(n, kNoPivot);
    Column scratch;
    for (std::uint32_t j = 0; j < n; ++j) {
        Column& c = cols[j];
        while (!c.empty() && pivot_of[c.back()] != kNoPivot)
            add_column(c, cols[pivot_of[c.back()]], scratch);
        if (!c.empty())
            pivot_of[c.back()] = j;
    }
    return pivot_of;
}

inline std::vector<std::uint32_t> reduce_twist(std::vector<Column>& cols, const Filtration& f, int dim_limit)
{
    const std::size_t n = cols.size();
    std::vector<std::uint32_t> pivot_of(n, kNoPivot);
    std::vector<char> cleared(n, 0);
    Column scratch;
    for (int d = dim_limit; d >= 1; --d) {
        for (std::uint32_t j = 0; j < n; ++j) {
            if (f.simplices[j].dim() != d || cleared[j])
                continue;
            Column& c = cols[j];
            while (!c.empty() && pivot_of[c.back()] != kNoPivot)
                add_column(c, cols[pivot_of[c.back()]], scratch);
            if (!c.empty()) {
                const std::uint32_t low = c.back();
                pivot_of[low] = j;
                // `low` creates the class this column kills, so its own
                // column would reduce to zero.
                cleared[low] = 1;
                cols[low].clear();
            }
        }
    }
    return pivot_of;
}

} // namespace detail

enum class Reduction { Standard, Twist };

/// Persistence pairing up to degree k_max.  Intervals of degree k come from
/// pairs (k-simplex, (k+1)-simplex); unpaired k-simplices that are cycles
/// give infinite intervals.  Zero-length pairs are kept.
inline PersistenceDiagram compute_persistence(const Filtration& f, int k_max, Reduction method = Reduction::Twist)
{
    if (k_max < 0)
        fail(ErrorKind::InvalidInput, "k_max must be non-negative");
    if (k_max > f.dim_max)
        fail(ErrorKind::InvalidInput, "k_max exceeds the filtration's dim_max");
    const int dim_limit = std::min(k_max + 1, f.dim_max);
    auto cols = boundary_matrix(f, dim_limit);
    const auto pivot_of = method == Reduction::Standard ? detail::reduce_standard(cols)
                                                        : detail::reduce_twist(cols, f, dim_limit);

    PersistenceDiagram dgm(k_max, f.r_max);
    const std::size_t n = f.simplices.size();
    for (std::uint32_t i = 0; i < n; ++i) {
        const Simplex& s = f.simplices[i];
        const int k = s.dim();
        if (k > k_max)
            continue;
        if (pivot_of[i] != detail::kNoPivot) {
            dgm.add(k, {s.value, f.simplices[pivot_of[i]].value});
        } else if (cols[i].empty()) {
            // Positive simplex never killed.  (A cleared column is empty but
            // then i is the pivot of some column, handled above.)
            dgm.add(k, {s.value, kInfiniteDeath});
        }
    }
    dgm.canonicalize();
    return dgm;
}

/// Number of degree-k intervals alive at r (birth <= r < death).
inline std::size_t betti_at(const PersistenceDiagram& dgm, double r, int k)
{
    if (r < 0.0)
        fail(ErrorKind::InvalidInput, "radius must be non-negative");
    if (r > dgm.r_max())
        fail(ErrorKind::OutOfRange, "radius " + format_double(r) + " beyond r_max " + format_double(dgm.r_max()));
    std::size_t count = 0;
    for (const Interval& iv : dgm.degree(k))
        if (iv.birth <= r && r < iv.death)
            ++count;
    return count;
}

/// Degree-k classes born by r that are still alive after s.
inline std::size_t persistent_betti(const PersistenceDiagram& dgm, double r, double s, int k)
{
    if (r > s)
        fail(ErrorKind::InvalidInput, "persistent Betti number needs r <= s");
    if (r < 0.0)
        fail(ErrorKind::InvalidInput, "radius must be non-negative");
    if (s > dgm.r_max())
        fail(ErrorKind::OutOfRange, "radius " + format_double(s) + " beyond r_max " + format_double(dgm.r_max()));
    std::size_t count = 0;
    for (const Interval& iv : dgm.degree(k))
        if (iv.birth <= r && iv.death > s)
            ++count;
    return count;
}

inline std::string diagram_to_csv(const PersistenceDiagram& dgm)
{
    std::string out = "k,birth,death\n";
    for (int k = 0; k <= dgm.k_max(); ++k)
        for (const Interval& iv : dgm.degree(k)) {
            out += std::to_string(k);
            out += ',';
            out += format_double(iv.birth);
            out += ',';
            out += format_double(iv.death);
            out += '\n';
        }
    return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracle.  Shares no code with the reduction above: faces are
// located through an ordered map and ranks come from dense Gaussian
// elimination on bit-packed columns.

inline constexpr std::size_t kBruteForceCap = 5000;

namespace detail {

class BitMatrixRank {
public:
    explicit BitMatrixRank(std::size_t rows) : words_((rows + 63) / 64), pivot_row_owner_(rows, -1) {}

    // Inserts a column; returns true if it increased the rank.
    bool insert(std::vector<std::uint64_t> col)
    {
        for (;;) {
            const long low = lowest(col);
            if (low < 0)
                return false;
            const long owner = pivot_row_owner_[static_cast<std::size_t>(low)];
            if (owner < 0) {
                pivot_row_owner_[static_cast<std::size_t>(low)] = static_cast<long>(basis_.size());
                basis_.push_back(std::move(col));
                return true;
            }
            const auto& b = basis_[static_cast<std::size_t>(owner)];
            for (std::size_t w = 0; w < words_; ++w)
                col[w] ^= b[w];
        }
    }

    std::size_t rank() const { return basis_.size(); }
    std::size_t words() const { return words_; }

private:
    long lowest(const std::vector<std::uint64_t>& col) const
    {
        for (std::size_t w = words_; w-- > 0;)
            if (col[w])
                return static_cast<long>(w * 64 + 63 - static_cast<std::size_t>(std::countl_zero(col[w])));
        return -1;
    }

    std::size_t words_;
    std::vector<long> pivot_row_owner_;
    std::vector<std::vector<std::uint64_t>> basis_;
};

struct SubComplex {
    std::vector<std::map<std::vector<std::uint32_t>, std::size_t>> index; // per dimension

    SubComplex(const Filtration& f, double r)
    {
        std::size_t total = 0;
        for (const Simplex& s : f.simplices)
            if (s.value <= r)
                ++total;
        if (total > kBruteForceCap)
            fail(ErrorKind::TooLarge, "sub-complex has " + std::to_string(total) + " simplices (cap 5000)");
        index.resize(static_cast<std::size_t>(f.dim_max) + 2);
        for (const Simplex& s : f.simplices) {
            if (s.value > r)
                continue;
            auto& m = index[static_cast<std::size_t>(s.dim())];
            const std::vector<std::uint32_t> key(s.vertex.begin(), s.vertex.begin() + s.count);
            m.emplace(key, m.size());
        }
    }

    std::size_t count(int k) const
    {
        return k < 0 || k >= static_cast<int>(index.size()) ? 0 : index[static_cast<std::size_t>(k)].size();
    }

    std::vector<std::uint64_t> boundary(const std::vector<std::uint32_t>& s) const
    {
        const auto& lower = index[s.size() - 2];
        std::vector<std::uint64_t> col((lower.size() + 63) / 64, 0);
        for (std::size_t skip = 0; skip < s.size(); ++skip) {
            std::vector<std::uint32_t> face;
            for (std::size_t a = 0; a < s.size(); ++a)
                if (a != skip)
                    face.push_back(s[a]);
            const std::size_t row = lower.at(face);
            col[row / 64] ^= std::uint64_t{1} << (row % 64);
        }
        return col;
    }

    std::size_t boundary_rank(int k) const
    {
        if (k < 1 || count(k) == 0)
            return 0;
        BitMatrixRank m(count(k - 1));
        for (const auto& [s, idx] : index[static_cast<std::size_t>(k)])
            m.insert(boundary(s));
        return m.rank();
    }
};

} // namespace detail

/// β_k of the sub-complex {σ : value(σ) <= r} as dim ker ∂_k − rank ∂_{k+1},
/// computed independently of the persistence code.  Test oracle.
inline std::size_t brute_force_betti(const Filtration& f, double r, int k)
{
    if (k < 0)
        fail(ErrorKind::InvalidInput, "degree must be non-negative");
    const detail::SubComplex sub(f, r);
    const std::size_t nk = sub.count(k);
    if (nk == 0)
        return 0;
    return nk - sub.boundary_rank(k) - sub.boundary_rank(k + 1);
}

/// Rank of H_k(K_r) -> H_k(K_s), as rank[B_s | Z_r] − rank B_s.  Test oracle.
inline std::size_t brute_force_persistent_betti(const Filtration& f, double r, double s, int k)
{
    if (r > s)
        fail(ErrorKind::InvalidInput, "persistent Betti number needs r <= s");
    const detail::SubComplex big(f, s);
    const detail::SubComplex small(f, r);
    if (small.count(k) == 0)
        return 0;
    const auto& cells_s = big.index[static_cast<std::size_t>(k)];
    const std::size_t nk = cells_s.size();
    const std::size_t words = (nk + 63) / 64;

    // Boundaries of K_s in the k-chain coordinates of K_s.
    detail::BitMatrixRank joint(nk);
    std::size_t rank_b = 0;
    if (static_cast<std::size_t>(k + 1) < big.index.size())
        for (const auto& [cell, idx] : big.index[static_cast<std::size_t>(k + 1)]) {
            std::vector<std::uint64_t> col(words, 0);
            for (std::size_t skip = 0; skip < cell.size(); ++skip) {
                std::vector<std::uint32_t> face;
                for (std::size_t a = 0; a < cell.size(); ++a)
                    if (a != skip)
                        face.push_back(cell[a]);
                const std::size_t row = cells_s.at(face);
                col[row / 64] ^= std::uint64_t{1} << (row % 64);
            }
            if (joint.insert(std::move(col)))
                ++rank_b;
        }

    // Cycle basis of K_r: eliminate boundary columns while tracking the
    // combination; a column that vanishes contributes a cycle.
    const auto& cells_r = small.index[static_cast<std::size_t>(k)];
    std::vector<std::vector<std::uint32_t>> ordered(cells_r.size());
    for (const auto& [cell, idx] : cells_r)
        ordered[idx] = cell;
    const std::size_t nr = ordered.size();
    const std::size_t rows = k == 0 ? 0 : small.count(k - 1);
    const std::size_t row_words = (rows + 63) / 64 + 1;
    const std::size_t comb_words = (nr + 63) / 64;
    std::vector<std::vector<std::uint64_t>> reduced;
    std::vector<std::vector<std::uint64_t>> combos;
    std::vector<long> owner(rows, -1);
    std::size_t gained = 0;
    for (std::size_t c = 0; c < nr; ++c) {
        std::vector<std::uint64_t> col = k == 0 ? std::vector<std::uint64_t>(row_words, 0) : small.boundary(ordered[c]);
        col.resize(row_words, 0);
        std::vector<std::uint64_t> comb(comb_words, 0);
        comb[c / 64] |= std::uint64_t{1} << (c % 64);
        for (;;) {
            long low = -1;
            for (std::size_t w = row_words; w-- > 0;)
                if (col[w]) {
                    low = static_cast<long>(w * 64 + 63 - static_cast<std::size_t>(std::countl_zero(col[w])));
                    break;
                }
            if (low < 0) {
                // Cycle: express it in K_s coordinates and test independence.
                std::vector<std::uint64_t> z(words, 0);
                for (std::size_t e = 0; e < nr; ++e)
                    if (comb[e / 64] >> (e % 64) & 1u) {
                        const std::size_t row = cells_s.at(ordered[e]);
                        z[row / 64] ^= std::uint64_t{1} << (row % 64);
                    }
                if (joint.insert(std::move(z)))
                    ++gained;
                break;
            }
            const long o = owner[static_cast<std::size_t>(low)];
            if (o < 0) {
                owner[static_cast<std::size_t>(low)] = static_cast<long>(reduced.size());
                reduced.push_back(std::move(col));
                combos.push_back(std::move(comb));
                break;
            }
            for (std::size_t w = 0; w < row_words; ++w)
                col[w] ^= reduced[static_cast<std::size_t>(o)][w];
            for (std::size_t w = 0; w < comb_words; ++w)
                comb[w] ^= combos[static_cast<std::size_t>(o)][w];
        }
    }
    return gained;
}

} // namespace bettieq
