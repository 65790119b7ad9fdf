#pragma once

/*
Seeded Monte Carlo engines.

One trajectory starts at Y_0 = y0 and samples n-1 transitions from the
policy's twisted kernel; the likelihood-ratio weight is accumulated in log
space:

    log w += -<alpha_j, g(Y_j)> + H(alpha_j) + log r(Y_{j-1}) - log r(Y_j).

Replications use substreams derived from (seed, index) with splitmix64, so a
result is bit-identical for a given (seed, config) no matter how replications
are scheduled; the reduction always runs in index order.
*/

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "raremc/chain.hpp"
#include "raremc/policy.hpp"
#include "raremc/rate.hpp"
#include "raremc/target.hpp"

namespace raremc {

namespace detail {

inline uint64_t splitmix64(uint64_t& s) {
    s += 0x9E3779B97F4A7C15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

// Reproducible substream: engine state is a pure function of (seed, index).
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t index) {
        uint64_t s = seed;
        uint64_t a = detail::splitmix64(s);
        s ^= index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull;
        uint64_t b = detail::splitmix64(s);
        engine_.seed(a ^ (b + 0x9E3779B97F4A7C15ull));
    }

    // 53-bit uniform in [0,1); independent of library distributions so the
    // stream is identical across standard library implementations.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

struct TrajectoryResult {
    bool hit = false;
    double log_weight = 0.0;
    Vec terminal_mean;
};

struct EstimateResult {
    std::string scheme;
    int n = 0;
    long K = 0;
    uint64_t seed = 0;
    double p_hat = 0.0;
    double std_err = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double second_moment = 0.0;
    std::optional<double> ratio; // (-log second_moment) / (-log p_hat)
};

namespace detail {

inline int sample_row(const FiniteChain& chain, const Matrix& Q, int y, double u) {
    const auto& adj = chain.row(y);
    double acc = 0.0;
    int last = adj.back().first;
    for (auto [z, p0] : adj) {
        (void)p0;
        acc += Q(y, z);
        if (u < acc) return z;
    }
    return last; // row sums to 1 up to eigen-solve noise
}

} // namespace detail

inline TrajectoryResult run_trajectory(const FiniteChain& chain, const AdditiveFunctional& g,
                                       const TargetSet& A, const PolicyEngine& engine, int n,
                                       RngStream& rng) {
    if (n < 1) throw DomainError("run_trajectory: n must be >= 1");
    const int d = g.d();
    int y = chain.y0();
    Vec S = g.g_vec(y); // S_j = sum of g over visited states
    double logw = 0.0;
    Vec x(d);
    for (int j = 1; j < n; ++j) {
        for (int k = 0; k < d; ++k) x[k] = S[k] / n;
        auto sd = engine.choose(y, x, j, n);
        int z = detail::sample_row(chain, sd->Q, y, rng.uniform01());
        const double* gz = g.g(z);
        double ag = 0.0;
        for (int k = 0; k < d; ++k) ag += sd->alpha[k] * gz[k];
        logw += -ag + sd->H + std::log(sd->r[y]) - std::log(sd->r[z]);
        for (int k = 0; k < d; ++k) S[k] += gz[k];
        y = z;
    }
    TrajectoryResult out;
    out.terminal_mean.resize(d);
    for (int k = 0; k < d; ++k) out.terminal_mean[k] = S[k] / n;
    out.hit = A.contains(out.terminal_mean);
    out.log_weight = logw;
    return out;
}

inline TrajectoryResult run_trajectory(const FiniteChain& chain, const AdditiveFunctional& g,
                                       const TargetSet& A, const Policy& policy, int n,
                                       RngStream& rng) {
    PolicyEngine engine(chain, g, policy);
    return run_trajectory(chain, g, A, engine, n, rng);
}

inline int resolve_thread_count(int requested, long K) {
    int t = requested;
    if (t <= 0) {
        if (const char* env = std::getenv("RAREMC_THREADS")) t = std::atoi(env);
        if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
        if (t <= 0) t = 1;
    } else if (const char* env = std::getenv("RAREMC_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) t = std::min(t, cap);
    }
    return static_cast<int>(std::min<long>(t, std::max<long>(K, 1)));
}

inline EstimateResult estimate(const FiniteChain& chain, const AdditiveFunctional& g,
                               const TargetSet& A, const PolicyEngine& engine, int n, long K,
                               uint64_t seed, int threads = 0) {
    if (K < 2) throw DomainError("estimate: need K >= 2");
    if (n < 1) throw DomainError("estimate: need n >= 1");

    std::vector<double> vals(K);
    auto worker = [&](long lo, long hi) {
        for (long k = lo; k < hi; ++k) {
            RngStream rng(seed, static_cast<uint64_t>(k));
            TrajectoryResult t = run_trajectory(chain, g, A, engine, n, rng);
            vals[k] = t.hit ? std::exp(t.log_weight) : 0.0;
        }
    };
    int T = resolve_thread_count(threads, K);
    if (T <= 1) {
        worker(0, K);
    } else {
        std::vector<std::thread> pool;
        long chunk = (K + T - 1) / T;
        for (int t = 0; t < T; ++t) {
            long lo = t * chunk, hi = std::min<long>(K, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // Reduction in replication order: independent of the thread schedule.
    double sum = 0.0, sum2 = 0.0;
    for (double v : vals) {
        sum += v;
        sum2 += v * v;
    }
    EstimateResult r;
    r.scheme = engine.policy().name();
    r.n = n;
    r.K = K;
    r.seed = seed;
    r.p_hat = sum / K;
    r.second_moment = sum2 / K;
    double var = std::max(0.0, (sum2 - K * r.p_hat * r.p_hat) / (K - 1));
    r.std_err = std::sqrt(var / K);
    r.ci_lo = r.p_hat - 1.96 * r.std_err;
    r.ci_hi = r.p_hat + 1.96 * r.std_err;
    if (r.p_hat > 0.0 && r.p_hat < 1.0 && r.second_moment > 0.0)
        r.ratio = std::log(r.second_moment) / std::log(r.p_hat);
    return r;
}

inline EstimateResult estimate(const FiniteChain& chain, const AdditiveFunctional& g,
                               const TargetSet& A, const Policy& policy, int n, long K,
                               uint64_t seed, int threads = 0) {
    PolicyEngine engine(chain, g, policy);
    return estimate(chain, g, A, engine, n, K, seed, threads);
}

// Fixed twist of the traditional scheme: conjugate of the global minimizer of
// L over the target.
inline Vec static_alpha_for(const FiniteChain& chain, const AdditiveFunctional& g, const TargetSet& A,
                            double alpha_max = 5.0) {
    RateOverTarget rt = rate_over_target(chain, g, A, alpha_max);
    Vec alpha(g.d(), 0.0);
    const Vec& v = A.halfspaces[rt.halfspace].v;
    for (int k = 0; k < g.d(); ++k) alpha[k] = rt.lambda * v[k];
    return alpha;
}

} // namespace raremc
