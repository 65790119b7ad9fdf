#pragma once

/*
Rate function and feedback control.

L is the convex conjugate of H. Constrained minima of L over halfspaces are
solved through the scalar Lagrangian dual

    inf { L(beta) : <v, beta> >= c }  =  sup_{lam >= 0} [ lam*c - H(lam*v) ],

whose stationarity condition <v, grad H(lam*v)> = c is monotone in lam. The
dual variable is confined to lam <= alpha_max / ||v||_inf; hitting that box
stands in for an infinite conjugate and is reported via the clamped flag.

The feedback rule at normalized position x with remaining fraction
rho = (n-j)/n rescales each offset to c~ = (c - <v,x>)/rho, prices every
halfspace, and tilts along the cheapest one.
*/

#include <algorithm>
#include <cmath>
#include <limits>

#include "raremc/chain.hpp"
#include "raremc/matrix.hpp"
#include "raremc/spectral.hpp"
#include "raremc/target.hpp"

namespace raremc {

struct LegendreResult {
    double L = 0.0;
    Vec alpha;
    bool clamped = false;
};

struct HalfspaceCost {
    double cost = 0.0;   // lam*c~ - H(lam*v + shift)
    double lambda = 0.0; // dual variable
    Vec beta;            // grad H at the solution
    bool clamped = false;
};

struct RateOverTarget {
    double value = 0.0;
    Vec beta;
    int halfspace = 0;
    double lambda = 0.0;
    bool clamped = false;
};

struct ControlPoint {
    Vec beta_star;
    Vec alpha_star;
    double cost = 0.0; // rho-scaled, i.e. (1-t) * halfspace cost
    bool clamped = false;
    int halfspace = 0;
};

// Closed forms of the two-state example; analytic oracle for the numeric path.
inline double two_state_H(double p, double alpha) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("two_state_H: p outside (0,1)");
    double u = p * std::exp(alpha);
    return std::log((u + std::sqrt(u * u + 4.0 * (1.0 - p))) / 2.0);
}

inline double two_state_alpha_star(double p, double beta) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("two_state_alpha_star: p outside (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("two_state_alpha_star: beta outside (0,1)");
    return 0.5 * std::log(4.0 * (1.0 - p) * beta * beta / (p * p * (1.0 - beta * beta)));
}

inline double two_state_L(double p, double beta) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("two_state_L: p outside (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("two_state_L: beta outside (0,1)");
    return (beta / 2.0) * std::log(4.0 * (1.0 - p) * beta * beta / (p * p * (1.0 - beta * beta))) +
           0.5 * std::log((1.0 - beta) / (1.0 + beta)) - 0.5 * std::log(1.0 - p);
}

namespace detail {

inline Vec scaled(const Vec& v, double s) {
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
    return out;
}

inline Vec axpy(const Vec& base, const Vec& v, double s) {
    Vec out = base;
    for (size_t i = 0; i < v.size(); ++i) out[i] += s * v[i];
    return out;
}

inline std::shared_ptr<const SpectralData>
spec_at(const FiniteChain& chain, const AdditiveFunctional& g, const Vec& alpha, const SpectralCache* cache) {
    if (cache) return cache->get(chain, g, alpha);
    return std::make_shared<const SpectralData>(spectral(chain, g, alpha));
}

} // namespace detail

// L(beta) = sup_alpha [<alpha,beta> - H(alpha)] over a box ||alpha||_inf <= alpha_max.
// d = 1 uses monotone bisection on H'; d > 1 projected gradient ascent on the
// strictly concave objective (gradient beta - grad H).
inline LegendreResult legendre(const FiniteChain& chain, const AdditiveFunctional& g, const Vec& beta,
                               double alpha_max = 5.0) {
    if (!(alpha_max > 0.0)) throw DomainError("legendre: alpha_max must be positive");
    const int d = g.d();
    if (static_cast<int>(beta.size()) != d) throw DomainError("legendre: beta dimension mismatch");

    auto value = [&](const Vec& a) { return dot(a, beta) - spectral(chain, g, a).H; };

    if (d == 1) {
        double b = beta[0];
        auto hp = [&](double a) { return spectral(chain, g, {a}).gradH[0]; };
        double lo = -alpha_max, hi = alpha_max;
        if (hp(lo) >= b) return {value({lo}), {lo}, true};
        if (hp(hi) <= b) return {value({hi}), {hi}, true};
        while (hi - lo > 1e-12) {
            double mid = 0.5 * (lo + hi);
            if (hp(mid) < b) lo = mid;
            else hi = mid;
        }
        double a = 0.5 * (lo + hi);
        return {value({a}), {a}, false};
    }

    Vec a(d, 0.0);
    double f = value(a);
    double eta = 1.0;
    for (int iter = 0; iter < 50000; ++iter) {
        Vec gr = spectral(chain, g, a).gradH;
        double gn2 = 0.0;
        bool interior_done = true;
        for (int k = 0; k < d; ++k) {
            gr[k] = beta[k] - gr[k];
            gn2 += gr[k] * gr[k];
            // component still pushing into the box interior?
            if ((a[k] >= alpha_max && gr[k] > 1e-9) || (a[k] <= -alpha_max && gr[k] < -1e-9)) continue;
            if (std::abs(gr[k]) > 1e-9) interior_done = false;
        }
        bool on_box = false;
        for (int k = 0; k < d; ++k)
            if (std::abs(a[k]) >= alpha_max - 1e-12) on_box = true;
        if (std::sqrt(gn2) < 1e-9) return {f, a, on_box};
        if (interior_done && on_box) return {f, a, true};
        Vec trial(d);
        for (int k = 0; k < d; ++k)
            trial[k] = std::clamp(a[k] + eta * gr[k], -alpha_max, alpha_max);
        double ft = value(trial);
        if (ft > f) {
            a = std::move(trial);
            f = ft;
            eta *= 1.3;
        } else {
            eta *= 0.5;
            if (eta < 1e-14) return {f, a, on_box};
        }
    }
    throw NoConvergence("legendre ascent did not converge");
}

// Dual of inf{L(beta): <v,beta> >= c~}. `shift` displaces the tilt argument
// (H evaluated at lam*v + shift), which prices halfspaces under a tilted rate
// function. `quantum` > 0 snaps every probed lam to a grid so repeated solves
// share SpectralCache entries; the returned lambda lies on that grid.
inline HalfspaceCost halfspace_cost(const FiniteChain& chain, const AdditiveFunctional& g, const Vec& v,
                                    double c_tilde, double alpha_max, const Vec& shift = {},
                                    const SpectralCache* cache = nullptr, double quantum = 0.0) {
    if (norm_inf(v) == 0.0) throw DomainError("halfspace_cost: zero normal");
    Vec base = shift.empty() ? Vec(v.size(), 0.0) : shift;

    auto probe = [&](double lam) { return detail::spec_at(chain, g, detail::axpy(base, v, lam), cache); };
    auto snap = [&](double lam) {
        return quantum > 0.0 ? std::nearbyint(lam / quantum) * quantum : lam;
    };

    auto sd0 = probe(0.0);
    if (dot(v, sd0->gradH) >= c_tilde)
        return {0.0 * c_tilde - sd0->H, 0.0, sd0->gradH, false};

    const double lam_box = alpha_max / norm_inf(v);
    auto sd_box = probe(lam_box);
    if (dot(v, sd_box->gradH) < c_tilde)
        return {lam_box * c_tilde - sd_box->H, lam_box, sd_box->gradH, true};

    double lo = 0.0, hi = lam_box;
    while (hi - lo > 1e-10) {
        double mid = snap(0.5 * (lo + hi));
        if (mid <= lo || mid >= hi) break;
        if (dot(v, probe(mid)->gradH) < c_tilde) lo = mid;
        else hi = mid;
    }
    double lam = snap(0.5 * (lo + hi));
    auto sd = probe(lam);
    return {lam * c_tilde - sd->H, lam, sd->gradH, false};
}

// inf of L over the target: cheapest halfspace at full horizon (x = 0).
// Ties resolve to the lowest index.
inline RateOverTarget rate_over_target(const FiniteChain& chain, const AdditiveFunctional& g,
                                       const TargetSet& A, double alpha_max = 5.0,
                                       const SpectralCache* cache = nullptr) {
    RateOverTarget best;
    bool first = true;
    for (size_t i = 0; i < A.halfspaces.size(); ++i) {
        const auto& h = A.halfspaces[i];
        HalfspaceCost hc = halfspace_cost(chain, g, h.v, h.c, alpha_max, {}, cache);
        if (first || hc.cost < best.value) {
            best = {hc.cost, hc.beta, static_cast<int>(i), hc.lambda, hc.clamped};
            first = false;
        }
    }
    return best;
}

// Feedback tilt at normalized position x, step j of horizon n.
inline ControlPoint feedback_control(const FiniteChain& chain, const AdditiveFunctional& g,
                                     const TargetSet& A, const Vec& x, int j, int n,
                                     double alpha_max = 5.0, const SpectralCache* cache = nullptr,
                                     double quantum = 0.0) {
    if (j < 1 || j > n - 1) throw DomainError("feedback_control: need 1 <= j <= n-1");
    const double rho = static_cast<double>(n - j) / n;
    ControlPoint best;
    double best_total = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < A.halfspaces.size(); ++i) {
        const auto& h = A.halfspaces[i];
        double c_tilde = (h.c - dot(h.v, x)) / rho;
        HalfspaceCost hc = halfspace_cost(chain, g, h.v, c_tilde, alpha_max, {}, cache, quantum);
        double total = rho * hc.cost;
        if (total < best_total) {
            best_total = total;
            best = {hc.beta, detail::scaled(h.v, hc.lambda), total, hc.clamped, static_cast<int>(i)};
        }
    }
    return best;
}

} // namespace raremc
