#pragma once

#include <vector>

#include "raremc/errors.hpp"
#include "raremc/matrix.hpp"

namespace raremc {

// One closed halfspace {z : <v, z> >= c}.
struct Halfspace {
    Vec v;
    double c = 0.0;
};

// Finite union of closed halfspaces. Membership is the union, with a small
// absolute slack so lattice points sitting exactly on a boundary stay inside.
struct TargetSet {
    std::vector<Halfspace> halfspaces;

    static constexpr double kBoundaryTol = 1e-12;

    TargetSet() = default;
    explicit TargetSet(std::vector<Halfspace> hs) : halfspaces(std::move(hs)) {
        if (halfspaces.empty()) throw DomainError("target set needs at least one halfspace");
        for (const auto& h : halfspaces)
            if (norm_inf(h.v) == 0.0) throw DomainError("halfspace normal must be nonzero");
    }

    int dim() const { return halfspaces.empty() ? 0 : static_cast<int>(halfspaces[0].v.size()); }

    bool contains(const Vec& z) const {
        for (const auto& h : halfspaces)
            if (dot(h.v, z) >= h.c - kBoundaryTol) return true;
        return false;
    }
};

// A = (-inf, a] u [b, inf) as two halfspaces, lower tail first.
inline TargetSet two_sided_interval_target(double a, double b) {
    if (!(a < b)) throw DomainError("two-sided target needs a < b");
    return TargetSet({Halfspace{{-1.0}, -a}, Halfspace{{1.0}, b}});
}

} // namespace raremc
