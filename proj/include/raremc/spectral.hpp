#pragma once

/*
Tilted-kernel spectral machinery.

For a tilt alpha, the kernel M_a(i,j) = exp(<alpha, g(j)>) P(i,j) has a real
Perron eigenvalue exp(H(alpha)) with a strictly positive right eigenvector
r(.; alpha). The twisted transition matrix

    Q_a(i,j) = exp(<alpha, g(j)> - H) * (r(j)/r(i)) * P(i,j)

is row-stochastic and preserves the zero pattern of P. grad H(alpha) equals
the stationary mean of g under Q_a.

Eigenpairs come from power iteration with a fixed all-ones start, so every
SpectralData is a pure function of (P, g, alpha) regardless of caller or
thread schedule.
*/

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "raremc/chain.hpp"
#include "raremc/errors.hpp"
#include "raremc/matrix.hpp"

namespace raremc {

struct SpectralData {
    Vec alpha;
    double H = 0.0; // log Perron eigenvalue
    Vec r;          // positive eigenvector, max entry 1
    Matrix Q;       // twisted row-stochastic kernel
    Vec pi;         // stationary distribution of Q
    Vec gradH;      // stationary mean of g under Q
};

namespace detail {

constexpr double kIterChangeTol = 1e-13;
constexpr int kIterCap = 100000;

// Power iteration for the dominant eigenpair of a nonnegative matrix given by
// sparse rows. Stops once the sup-norm iterate change is below tol and the
// residual ||Av - rho v||_inf is at rounding scale.
inline std::pair<double, Vec>
power_iteration(const std::vector<std::vector<std::pair<int, double>>>& rows, int n, double norm_scale) {
    Vec v(n, 1.0), w(n, 0.0);
    auto matvec = [&](const Vec& x, Vec& out) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (auto [j, a] : rows[i]) s += a * x[j];
            out[i] = s;
        }
    };
    double rho = 1.0;
    for (int iter = 0; iter < kIterCap; ++iter) {
        matvec(v, w);
        double nrm = norm_inf(w);
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NoConvergence("power iteration degenerated");
        double change = 0.0;
        for (int i = 0; i < n; ++i) {
            w[i] /= nrm;
            change = std::max(change, std::abs(w[i] - v[i]));
        }
        v.swap(w);
        if (change < kIterChangeTol) {
            matvec(v, w);
            rho = dot(v, w) / dot(v, v);
            double resid = 0.0;
            for (int i = 0; i < n; ++i) resid = std::max(resid, std::abs(w[i] - rho * v[i]));
            if (resid <= 1e-13 * norm_scale + 1e-12 * (1.0 + std::abs(rho))) {
                double mx = norm_inf(v);
                for (double& x : v) x /= mx;
                return {rho, v};
            }
        }
    }
    throw NoConvergence("power iteration hit the iteration cap (near-periodic structure?)");
}

} // namespace detail

inline SpectralData spectral(const FiniteChain& chain, const AdditiveFunctional& g, Vec alpha) {
    const int n = chain.n_states();
    if (static_cast<int>(alpha.size()) != g.d()) throw DomainError("tilt dimension mismatch");

    SpectralData sd;
    sd.alpha = alpha;

    bool zero_tilt = true;
    for (double a : alpha)
        if (a != 0.0) zero_tilt = false;

    Vec expw(n); // exp(<alpha, g(j)>)
    for (int j = 0; j < n; ++j) {
        double e = 0.0;
        const double* gj = g.g(j);
        for (int k = 0; k < g.d(); ++k) e += alpha[k] * gj[k];
        expw[j] = std::exp(e);
    }

    if (zero_tilt) {
        // Perron data of P itself is exact: eigenvalue 1, eigenvector one.
        sd.H = 0.0;
        sd.r.assign(n, 1.0);
        sd.Q = chain.P();
    } else {
        std::vector<std::vector<std::pair<int, double>>> rows(n);
        double norm_scale = 0.0;
        for (int i = 0; i < n; ++i) {
            double rowsum = 0.0;
            for (auto [j, p] : chain.row(i)) {
                rows[i].emplace_back(j, expw[j] * p);
                rowsum += expw[j] * p;
            }
            norm_scale = std::max(norm_scale, rowsum);
        }
        auto [rho, r] = detail::power_iteration(rows, n, norm_scale);
        if (!(rho > 0.0)) throw NoConvergence("nonpositive Perron eigenvalue estimate");
        for (double x : r)
            if (!(x > 0.0)) throw NoConvergence("eigenvector not strictly positive");
        sd.H = std::log(rho);
        sd.r = std::move(r);
        sd.Q = Matrix(n, n);
        double scale = std::exp(-sd.H);
        for (int i = 0; i < n; ++i)
            for (auto [j, p] : chain.row(i))
                sd.Q(i, j) = expw[j] * scale * (sd.r[j] / sd.r[i]) * p;
    }

    // Stationary distribution of Q via power iteration on Q^T.
    {
        std::vector<std::vector<std::pair<int, double>>> cols(n);
        for (int i = 0; i < n; ++i)
            for (auto [j, p] : chain.row(i)) cols[j].emplace_back(i, sd.Q(i, j));
        auto [one, piv] = detail::power_iteration(cols, n, 1.0);
        (void)one;
        double tot = 0.0;
        for (double x : piv) tot += x;
        for (double& x : piv) x /= tot;
        sd.pi = std::move(piv);
    }

    sd.gradH.assign(g.d(), 0.0);
    for (int y = 0; y < n; ++y) {
        const double* gy = g.g(y);
        for (int k = 0; k < g.d(); ++k) sd.gradH[k] += sd.pi[y] * gy[k];
    }
    return sd;
}

// Central finite differences of H, cross-check for spectral().gradH.
inline Vec grad_h_fd(const FiniteChain& chain, const AdditiveFunctional& g, const Vec& alpha,
                     double step = 1e-5) {
    Vec out(alpha.size());
    for (size_t k = 0; k < alpha.size(); ++k) {
        Vec hi = alpha, lo = alpha;
        hi[k] += step;
        lo[k] -= step;
        out[k] = (spectral(chain, g, hi).H - spectral(chain, g, lo).H) / (2.0 * step);
    }
    return out;
}

// Concurrent memo of SpectralData keyed by the exact bit pattern of alpha.
// Values are pure functions of the key, so duplicate inserts are idempotent.
class SpectralCache {
public:
    std::shared_ptr<const SpectralData>
    get(const FiniteChain& chain, const AdditiveFunctional& g, const Vec& alpha) const {
        std::vector<uint64_t> key(alpha.size());
        std::memcpy(key.data(), alpha.data(), alpha.size() * sizeof(double));
        {
            std::shared_lock lock(m_);
            auto it = entries_.find(key);
            if (it != entries_.end()) return it->second;
        }
        auto sd = std::make_shared<const SpectralData>(spectral(chain, g, alpha));
        std::unique_lock lock(m_);
        return entries_.emplace(std::move(key), std::move(sd)).first->second;
    }

    size_t size() const {
        std::shared_lock lock(m_);
        return entries_.size();
    }

private:
    mutable std::shared_mutex m_;
    mutable std::map<std::vector<uint64_t>, std::shared_ptr<const SpectralData>> entries_;
};

} // namespace raremc
