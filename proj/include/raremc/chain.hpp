#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "raremc/errors.hpp"
#include "raremc/matrix.hpp"
#include "raremc/target.hpp"

namespace raremc {

struct ValidationReport {
    bool irreducible = false;
    int period = 0;
    // Smallest m <= n^2 with P^m entrywise positive, when one exists.
    std::optional<int> m0;
};

namespace detail {

// Strong connectivity of the support graph via forward+backward reachability.
inline bool strongly_connected(const Matrix& P) {
    const int n = P.rows();
    auto reach = [&](bool forward) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                double e = forward ? P(u, w) : P(w, u);
                if (e > 0.0 && !seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
            }
        }
        for (char s : seen)
            if (!s) return false;
        return true;
    };
    return reach(true) && reach(false);
}

// Period of a strongly connected support graph: gcd over edges (u,w) of
// level[u] + 1 - level[w], levels from a BFS tree.
inline int graph_period(const Matrix& P) {
    const int n = P.rows();
    std::vector<int> level(n, -1);
    std::vector<int> queue{0};
    level[0] = 0;
    for (size_t q = 0; q < queue.size(); ++q) {
        int u = queue[q];
        for (int w = 0; w < n; ++w)
            if (P(u, w) > 0.0 && level[w] < 0) {
                level[w] = level[u] + 1;
                queue.push_back(w);
            }
    }
    int g = 0;
    for (int u = 0; u < n; ++u)
        for (int w = 0; w < n; ++w)
            if (P(u, w) > 0.0) g = std::gcd(g, std::abs(level[u] + 1 - level[w]));
    return g == 0 ? 1 : g;
}

// Smallest m <= n^2 with all of P^m positive, via boolean powering on
// bitset rows.
inline std::optional<int> positivity_index(const Matrix& P) {
    const int n = P.rows();
    const int words = (n + 63) / 64;
    using Bits = std::vector<uint64_t>;
    std::vector<Bits> support(n, Bits(words, 0)), power;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (P(i, j) > 0.0) support[i][j / 64] |= uint64_t(1) << (j % 64);
    power = support;
    auto all_ones = [&](const std::vector<Bits>& m) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (!(m[i][j / 64] >> (j % 64) & 1)) return false;
        return true;
    };
    for (int m = 1; m <= n * n; ++m) {
        if (all_ones(power)) return m;
        std::vector<Bits> next(n, Bits(words, 0));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                if (power[i][k / 64] >> (k % 64) & 1)
                    for (int w = 0; w < words; ++w) next[i][w] |= support[k][w];
        power = std::move(next);
    }
    return all_ones(power) ? std::optional<int>(n * n) : std::nullopt;
}

} // namespace detail

// Checks stochasticity and the recurrence structure (irreducible + aperiodic,
// which certifies uniform recurrence on a finite state space).
inline ValidationReport validate_chain(const Matrix& P, int y0, double row_tol = 1e-12) {
    if (P.rows() != P.cols() || P.rows() < 1) throw DomainError("transition matrix must be square");
    if (y0 < 0 || y0 >= P.rows()) throw DomainError("initial state out of range");
    for (int i = 0; i < P.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < P.cols(); ++j) {
            if (P(i, j) < 0.0) throw NegativeEntry("negative transition probability in row " + std::to_string(i));
            s += P(i, j);
        }
        if (std::abs(s - 1.0) > row_tol)
            throw RowSumViolation("row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
    if (!detail::strongly_connected(P)) throw Reducible("support graph is not irreducible");
    int period = detail::graph_period(P);
    if (period != 1) throw Periodic("chain has period " + std::to_string(period));
    ValidationReport rep;
    rep.irreducible = true;
    rep.period = 1;
    rep.m0 = detail::positivity_index(P);
    return rep;
}

// Finite-state chain; immutable after construction, rows exposed both dense
// and as sparse (index, probability) lists.
class FiniteChain {
public:
    FiniteChain(Matrix P, int y0, std::vector<std::string> labels = {}, double row_tol = 1e-12)
        : P_(std::move(P)), y0_(y0), labels_(std::move(labels)) {
        report_ = validate_chain(P_, y0_, row_tol);
        adj_.resize(P_.rows());
        for (int i = 0; i < P_.rows(); ++i)
            for (int j = 0; j < P_.cols(); ++j)
                if (P_(i, j) > 0.0) adj_[i].emplace_back(j, P_(i, j));
    }

    int n_states() const { return P_.rows(); }
    int y0() const { return y0_; }
    const Matrix& P() const { return P_; }
    double p(int i, int j) const { return P_(i, j); }
    const std::vector<std::pair<int, double>>& row(int i) const { return adj_[i]; }
    const std::vector<std::string>& labels() const { return labels_; }
    const ValidationReport& validation() const { return report_; }

private:
    Matrix P_;
    int y0_;
    std::vector<std::string> labels_;
    ValidationReport report_;
    std::vector<std::vector<std::pair<int, double>>> adj_;
};

// Per-state reward g : S -> R^d. The lattice flag asserts integer entries,
// which the exact recursions require.
class AdditiveFunctional {
public:
    AdditiveFunctional(Matrix g, bool lattice)
        : g_(std::move(g)), lattice_(lattice) {
        if (g_.rows() < 1 || g_.cols() < 1) throw DomainError("g must be nonempty");
        if (lattice_) {
            gi_.resize(g_.rows(), std::vector<long long>(g_.cols()));
            for (int y = 0; y < g_.rows(); ++y)
                for (int k = 0; k < g_.cols(); ++k) {
                    double v = g_(y, k);
                    if (v != std::nearbyint(v))
                        throw NotLattice("lattice flag set but g is not integer-valued");
                    gi_[y][k] = static_cast<long long>(std::llround(v));
                }
        }
    }

    int d() const { return g_.cols(); }
    int n_states() const { return g_.rows(); }
    bool lattice() const { return lattice_; }
    const Matrix& values() const { return g_; }
    const double* g(int y) const { return g_.row(y); }
    Vec g_vec(int y) const { return Vec(g_.row(y), g_.row(y) + g_.cols()); }
    const std::vector<long long>& g_int(int y) const { return gi_[y]; }

    double min_coord(int k) const {
        double m = g_(0, k);
        for (int y = 1; y < g_.rows(); ++y) m = std::min(m, g_(y, k));
        return m;
    }
    double max_coord(int k) const {
        double m = g_(0, k);
        for (int y = 1; y < g_.rows(); ++y) m = std::max(m, g_(y, k));
        return m;
    }

private:
    Matrix g_;
    bool lattice_;
    std::vector<std::vector<long long>> gi_;
};

// Two-state chain of the scalar example: states {+1,-1},
// P = [[p, 1-p], [1, 0]], g(x) = x, started at +1.
inline std::pair<FiniteChain, AdditiveFunctional> build_two_state(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("two-state preset needs p in (0,1)");
    Matrix P = Matrix::from_rows({{p, 1.0 - p}, {1.0, 0.0}});
    Matrix g = Matrix::from_rows({{1.0}, {-1.0}});
    return {FiniteChain(std::move(P), 0, {"+1", "-1"}), AdditiveFunctional(std::move(g), true)};
}

// Uniformized embedded chain of a two-node tandem queue with finite buffers.
// Infeasible events become self-loops; a node-1 completion into a full
// second buffer loses the customer. g = (1{y1=B1}, 1{y2=B2}).
// Target A = {x1 >= eps1} u {x2 >= eps2}.
inline std::tuple<FiniteChain, AdditiveFunctional, TargetSet>
build_tandem(double lambda, double mu1, double mu2, int B1, int B2, double eps1, double eps2) {
    if (!(lambda > 0.0 && mu1 > 0.0 && mu2 > 0.0)) throw DomainError("tandem rates must be positive");
    if (B1 < 1 || B2 < 1) throw DomainError("tandem buffers must be >= 1");
    if (std::abs(lambda + mu1 + mu2 - 1.0) > 1e-12)
        throw RatesNotNormalized("tandem rates must satisfy lambda + mu1 + mu2 = 1");
    if (!(lambda < std::min(mu1, mu2))) throw UnstableSystem("tandem needs lambda < min(mu1, mu2)");

    const int n = (B1 + 1) * (B2 + 1);
    auto idx = [&](int y1, int y2) { return y1 * (B2 + 1) + y2; };
    Matrix P(n, n);
    Matrix g(n, 2);
    std::vector<std::string> labels(n);
    for (int y1 = 0; y1 <= B1; ++y1)
        for (int y2 = 0; y2 <= B2; ++y2) {
            int i = idx(y1, y2);
            labels[i] = "(" + std::to_string(y1) + "," + std::to_string(y2) + ")";
            // arrival
            if (y1 < B1) P(i, idx(y1 + 1, y2)) += lambda;
            else P(i, i) += lambda;
            // node-1 completion
            if (y1 > 0) {
                if (y2 < B2) P(i, idx(y1 - 1, y2 + 1)) += mu1;
                else P(i, idx(y1 - 1, y2)) += mu1; // downstream full: customer lost
            } else {
                P(i, i) += mu1;
            }
            // node-2 completion
            if (y2 > 0) P(i, idx(y1, y2 - 1)) += mu2;
            else P(i, i) += mu2;
            g(i, 0) = y1 == B1 ? 1.0 : 0.0;
            g(i, 1) = y2 == B2 ? 1.0 : 0.0;
        }
    TargetSet target({Halfspace{{1.0, 0.0}, eps1}, Halfspace{{0.0, 1.0}, eps2}});
    return {FiniteChain(std::move(P), idx(0, 0), std::move(labels)),
            AdditiveFunctional(std::move(g), true), std::move(target)};
}

} // namespace raremc
