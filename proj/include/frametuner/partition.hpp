#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frametuner/eig.hpp"
#include "frametuner/frame.hpp"
#include "frametuner/matrix.hpp"

namespace frametuner {

/// A nontrivial two-block split of the column indices {0..N-1} together with
/// its bottleneck, the largest |<f_i, f_j>| across the split.
struct Partition {
    std::vector<std::size_t> block_i;
    std::vector<std::size_t> block_j;
    double bottleneck = 0.0;
};

namespace detail {

struct UnionFind {
    explicit UnionFind(std::size_t n) : parent(n), rank(n, 0) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank[a] < rank[b]) std::swap(a, b);
        parent[b] = a;
        if (rank[a] == rank[b]) ++rank[a];
        return true;
    }

    std::vector<std::size_t> parent;
    std::vector<std::size_t> rank;
};

struct GramEdge {
    double weight;
    std::size_t i;
    std::size_t j;
};

/// |<f_i, f_j>| for all pairs, as a symmetric N x N table.
template <class T>
std::vector<std::vector<double>> abs_gram(const Frame<T>& f) {
    const std::size_t n = f.count();
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<T> fi = f.column(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double val = std::sqrt(abs_sq(inner(fi, f.column(j))));
            w[i][j] = val;
            w[j][i] = val;
        }
    }
    return w;
}

inline double cross_bottleneck(const std::vector<std::vector<double>>& w,
                               const std::vector<std::size_t>& block_i,
                               const std::vector<std::size_t>& block_j) {
    double worst = 0.0;
    for (std::size_t i : block_i) {
        for (std::size_t j : block_j) {
            worst = std::max(worst, w[i][j]);
        }
    }
    return worst;
}

}  // namespace detail

/// tau(F): the smallest achievable partition bottleneck, with a partition
/// achieving it. F is epsilon-OP exactly when tau(F) < epsilon (strict).
///
/// Edges of the complete graph with weights |<f_i, f_j>| are processed in
/// descending weight order (ties in ascending (i, j) order) through a
/// union-find; the edge that merges the last two components has weight tau,
/// and those two components are the returned partition. The value is
/// order-independent; the partition itself can depend on the tie order.
template <class T>
std::pair<double, Partition> op_threshold(const Frame<T>& f) {
    const std::size_t n = f.count();
    if (n < 2) throw std::invalid_argument("op_threshold: need at least two vectors");

    const std::vector<std::vector<double>> w = detail::abs_gram(f);
    std::vector<detail::GramEdge> edges;
    edges.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            edges.push_back({w[i][j], i, j});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const detail::GramEdge& a, const detail::GramEdge& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    detail::UnionFind uf(n);
    std::size_t components = n;
    std::size_t final_edge = 0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (uf.unite(edges[k].i, edges[k].j)) {
            --components;
            if (components == 1) {
                final_edge = k;
                break;
            }
        }
    }

    // Re-run up to (but not including) the final merge to read off the two
    // components it joined.
    detail::UnionFind before(n);
    for (std::size_t k = 0; k < final_edge; ++k) before.unite(edges[k].i, edges[k].j);
    const std::size_t root_i = before.find(edges[final_edge].i);
    Partition part;
    for (std::size_t idx = 0; idx < n; ++idx) {
        if (before.find(idx) == root_i) {
            part.block_i.push_back(idx);
        } else {
            part.block_j.push_back(idx);
        }
    }
    if (part.block_i.front() != 0) std::swap(part.block_i, part.block_j);
    part.bottleneck = edges[final_edge].weight;
    return {part.bottleneck, part};
}

/// An achieving partition when tau(F) < epsilon, otherwise absent. Strict
/// inequality: a frame whose threshold equals epsilon exactly is not
/// epsilon-OP.
template <class T>
std::optional<Partition> is_epsilon_op(const Frame<T>& f, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("is_epsilon_op: epsilon must be positive");
    auto [tau, part] = op_threshold(f);
    if (tau < epsilon) return part;
    return std::nullopt;
}

/// Exhaustive minimum over all 2^(N-1) - 1 nontrivial bipartitions. Test
/// oracle for op_threshold; limited to N <= 16.
template <class T>
std::pair<double, Partition> brute_force_op_threshold(const Frame<T>& f) {
    const std::size_t n = f.count();
    if (n < 2) throw std::invalid_argument("brute_force_op_threshold: need at least two vectors");
    if (n > 16) throw std::invalid_argument("brute_force_op_threshold: N too large (max 16)");

    const std::vector<std::vector<double>> w = detail::abs_gram(f);
    double best = -1.0;
    std::uint32_t best_mask = 0;
    const std::uint32_t limit = 1u << (n - 1);
    // Index 0 stays in block I; the mask picks block J from indices 1..N-1.
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool i_in_j = i > 0 && ((mask >> (i - 1)) & 1u);
            if (i_in_j) continue;
            for (std::size_t j = 1; j < n; ++j) {
                if (((mask >> (j - 1)) & 1u) == 0) continue;
                worst = std::max(worst, w[i][j]);
            }
        }
        if (best < 0.0 || worst < best) {
            best = worst;
            best_mask = mask;
        }
    }

    Partition part;
    part.bottleneck = best;
    part.block_i.push_back(0);
    for (std::size_t j = 1; j < n; ++j) {
        if ((best_mask >> (j - 1)) & 1u) {
            part.block_j.push_back(j);
        } else {
            part.block_i.push_back(j);
        }
    }
    return {best, part};
}

/// Output of the jump to an exactly orthogonally partitionable frame.
template <class T>
struct JumpResult {
    Frame<T> op_frame;
    Partition partition;      // blocks as projected; bottleneck of the new frame
    double displacement;      // ||op_frame - input||_HS
    std::size_t dim_i;        // rank of the block-I projector
    std::size_t dim_j;        // space_dim - dim_i
    Matrix<T> basis_i;        // M x dim_i orthonormal, eigenvalues descending
    Matrix<T> basis_j;        // M x dim_j orthonormal, the complementary columns
};

/// Converts an epsilon-OP frame into an exactly OP one: the block-I frame
/// operator's eigenvalues (descending) are cut at lambda' = (2N/3)(eps^2/M)^(1/3);
/// block I is projected onto the top eigenvectors and renormalized, block J
/// onto the complement. Requires epsilon in (0, 1/(2M)] and a partition whose
/// bottleneck is below epsilon; the displacement then stays within
/// sqrt(2N) * (M * eps)^(1/3).
template <class T>
JumpResult<T> jump_to_op(const Frame<T>& f, double epsilon, const Partition& p) {
    const std::size_t dim = f.space_dim();
    const std::size_t n = f.count();
    if (epsilon <= 0.0 || epsilon > 1.0 / (2.0 * static_cast<double>(dim))) {
        throw std::invalid_argument("jump_to_op: epsilon must lie in (0, 1/(2M)]");
    }
    if (p.block_i.empty() || p.block_j.empty() || p.block_i.size() + p.block_j.size() != n) {
        throw std::invalid_argument("jump_to_op: partition does not split {0..N-1}");
    }

    std::vector<std::size_t> big = p.block_i;
    std::vector<std::size_t> small = p.block_j;
    if (big.size() < small.size()) std::swap(big, small);

    const std::vector<std::vector<double>> w = detail::abs_gram(f);
    const double bottleneck = detail::cross_bottleneck(w, big, small);
    if (bottleneck >= epsilon) {
        throw std::invalid_argument("jump_to_op: partition bottleneck " +
                                    std::to_string(bottleneck) + " is not below epsilon " +
                                    std::to_string(epsilon));
    }

    // Frame operator of the large block alone.
    Matrix<T> block_op(dim, dim);
    for (std::size_t idx : big) {
        const std::vector<T> col = f.column(idx);
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t b = 0; b < dim; ++b) {
                block_op(a, b) += col[a] * conj_of(col[b]);
            }
        }
    }
    const EigenDecomposition<T> eig = hermitian_eig(block_op);

    const double lambda_cut = (2.0 * static_cast<double>(n) / 3.0) *
                              std::cbrt(epsilon * epsilon / static_cast<double>(dim));
    std::size_t rank_i = 0;
    for (double lambda : eig.eigenvalues) {
        if (lambda >= lambda_cut) ++rank_i;
    }
    if (rank_i == 0 || rank_i == dim) {
        throw std::runtime_error(
            "jump_to_op: spectral cut produced a trivial projector (rank " +
            std::to_string(rank_i) + " of " + std::to_string(dim) +
            "); the epsilon-OP hypothesis does not hold numerically");
    }

    // Eigenvectors in descending eigenvalue order; first rank_i columns span
    // the block-I subspace.
    Matrix<T> basis_i(dim, rank_i);
    Matrix<T> basis_j(dim, dim - rank_i);
    for (std::size_t k = 0; k < dim; ++k) {
        const std::size_t src = dim - 1 - k;  // descending
        for (std::size_t m = 0; m < dim; ++m) {
            if (k < rank_i) {
                basis_i(m, k) = eig.eigenvectors(m, src);
            } else {
                basis_j(m, k - rank_i) = eig.eigenvectors(m, src);
            }
        }
    }

    const auto project = [&](const std::vector<T>& col, const Matrix<T>& basis) {
        std::vector<T> out(dim, T{});
        for (std::size_t k = 0; k < basis.cols(); ++k) {
            T coeff{};
            for (std::size_t m = 0; m < dim; ++m) coeff += col[m] * conj_of(basis(m, k));
            for (std::size_t m = 0; m < dim; ++m) out[m] += coeff * basis(m, k);
        }
        return out;
    };

    Matrix<T> syn = f.synthesis();
    const auto place = [&](const std::vector<std::size_t>& block, const Matrix<T>& basis) {
        for (std::size_t idx : block) {
            std::vector<T> proj = project(f.column(idx), basis);
            const double len = norm(proj);
            if (len <= 1e-14) {
                // Projection vanished; fall back to the leading basis vector.
                proj = basis.col(0);
            } else {
                for (T& x : proj) x *= 1.0 / len;
            }
            syn.set_col(idx, proj);
        }
    };
    place(big, basis_i);
    place(small, basis_j);

    JumpResult<T> out{Frame<T>(std::move(syn)), Partition{}, 0.0, rank_i, dim - rank_i,
                      std::move(basis_i), std::move(basis_j)};
    out.partition.block_i = std::move(big);
    out.partition.block_j = std::move(small);
    out.partition.bottleneck = detail::cross_bottleneck(detail::abs_gram(out.op_frame),
                                                        out.partition.block_i,
                                                        out.partition.block_j);
    if (out.partition.bottleneck > 1e-10) {
        throw std::runtime_error("jump_to_op: output is not orthogonally partitioned (cross " +
                                 std::to_string(out.partition.bottleneck) + ")");
    }
    out.displacement = hs_norm(out.op_frame.synthesis() - f.synthesis());
    return out;
}

}  // namespace frametuner
