#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <utility>

#include "raremc/chain.hpp"
#include "raremc/rate.hpp"
#include "raremc/spectral.hpp"
#include "raremc/target.hpp"

namespace raremc {

// Sampling control: naive (no twist), a fixed static twist, or the adaptive
// feedback rule driven by a target set.
struct Policy {
    enum class Kind { Naive, Static, Adaptive };

    Kind kind = Kind::Naive;
    Vec alpha;        // Static only
    TargetSet target; // Adaptive only
    double alpha_max = 5.0;

    static Policy naive() { return Policy{}; }
    static Policy static_twist(Vec alpha) {
        Policy p;
        p.kind = Kind::Static;
        p.alpha = std::move(alpha);
        return p;
    }
    static Policy adaptive(TargetSet target, double alpha_max = 5.0) {
        Policy p;
        p.kind = Kind::Adaptive;
        p.target = std::move(target);
        p.alpha_max = alpha_max;
        return p;
    }

    std::string name() const {
        switch (kind) {
            case Kind::Naive: return "naive";
            case Kind::Static: return "static";
            case Kind::Adaptive: return "adaptive";
        }
        return "?";
    }
};

// Policy bound to one (chain, g): resolves the twist for a step and hands out
// the spectral data used for both sampling and weighting. Thread-safe; all
// cached values are pure functions of their keys, and the adaptive lambda is
// snapped to a 1e-6 grid so the cache is shared across steps.
class PolicyEngine {
public:
    static constexpr double kLambdaQuantum = 1e-6;

    PolicyEngine(const FiniteChain& chain, const AdditiveFunctional& g, Policy policy)
        : chain_(chain), g_(g), policy_(std::move(policy)) {
        if (policy_.kind == Policy::Kind::Naive)
            base_ = cache_.get(chain_, g_, Vec(g_.d(), 0.0));
        else if (policy_.kind == Policy::Kind::Static)
            base_ = cache_.get(chain_, g_, policy_.alpha);
        else if (policy_.target.halfspaces.empty())
            throw DomainError("adaptive policy needs a non-empty target");
    }

    const Policy& policy() const { return policy_; }
    const FiniteChain& chain() const { return chain_; }
    const AdditiveFunctional& functional() const { return g_; }

    // Twist for transition j (1-based) given position x = S_j/n. The feedback
    // rule depends on (x, j, n) only; y is part of the contract for policies
    // that condition on the current state.
    std::shared_ptr<const SpectralData> choose(int y, const Vec& x, int j, int n) const {
        (void)y;
        if (policy_.kind != Policy::Kind::Adaptive) return base_;

        CtrlKey key{n, j, {}};
        key.xbits.resize(x.size());
        std::memcpy(key.xbits.data(), x.data(), x.size() * sizeof(double));
        {
            std::shared_lock lock(ctrl_m_);
            auto it = ctrl_.find(key);
            if (it != ctrl_.end()) return it->second;
        }
        ControlPoint cp = feedback_control(chain_, g_, policy_.target, x, j, n, policy_.alpha_max,
                                           &cache_, kLambdaQuantum);
        auto sd = cache_.get(chain_, g_, cp.alpha_star);
        std::unique_lock lock(ctrl_m_);
        return ctrl_.emplace(std::move(key), std::move(sd)).first->second;
    }

    const SpectralCache& spectral_cache() const { return cache_; }

private:
    struct CtrlKey {
        int n, j;
        std::vector<uint64_t> xbits;
        bool operator<(const CtrlKey& o) const {
            if (n != o.n) return n < o.n;
            if (j != o.j) return j < o.j;
            return xbits < o.xbits;
        }
    };

    const FiniteChain& chain_;
    const AdditiveFunctional& g_;
    Policy policy_;
    std::shared_ptr<const SpectralData> base_;
    mutable SpectralCache cache_;
    mutable std::shared_mutex ctrl_m_;
    mutable std::map<CtrlKey, std::shared_ptr<const SpectralData>> ctrl_;
};

} // namespace raremc
