#pragma once

#include <stdexcept>
#include <string>

namespace raremc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model construction / validation
struct RowSumViolation : Error { using Error::Error; };
struct NegativeEntry : Error { using Error::Error; };
struct Reducible : Error { using Error::Error; };
struct Periodic : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct UnstableSystem : Error { using Error::Error; };
struct RatesNotNormalized : Error { using Error::Error; };

// Numerics
struct NoConvergence : Error { using Error::Error; };

// Exact recursions
struct NotLattice : Error { using Error::Error; };
struct MemoryBound : Error { using Error::Error; };

// CLI / configuration
struct ConfigError : Error { using Error::Error; };

} // namespace raremc
