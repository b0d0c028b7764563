#pragma once

#include <functional>

#include "pgdk/numerics.hpp"

namespace pgdk {

// Stage cost c(x,u) >= 0 with its analytic input gradient d c / d u.
// The policy gradient consumes grad_u directly.
struct CostOracle {
    std::function<double(const Vector&, const Vector&)> cost;
    std::function<Vector(const Vector&, const Vector&)> grad_u;
};

}  // namespace pgdk
