#pragma once

#include <stdexcept>
#include <string>

namespace ncqsm {

// Argument outside the region where a series or state is defined
// (e.g. Re(s) at or below the abscissa, beta <= 1 for Bost-Connes).
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Requested truncation exceeds a configured cap or a table limit.
struct capacity_error : std::length_error {
    using std::length_error::length_error;
};

// Operands live on different truncated bases or have mismatched shapes.
struct structural_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Not enough boundary resolution to evaluate a limit.
struct resolution_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Clipped mass above threshold in strict mode.
struct truncation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ncqsm
