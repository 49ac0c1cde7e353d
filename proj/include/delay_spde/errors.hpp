#pragma once

#include <stdexcept>
#include <string>

namespace delay_spde {

/// Shapes or grids of two objects do not fit together.
struct structural_error : std::runtime_error {
    explicit structural_error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values where finite data is required.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// Two inputs that must agree (e.g. a path head and a history head) do not.
struct consistency_error : std::runtime_error {
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

/// A solver could not reach its contract (divergence, conditioning).
struct solve_error : std::runtime_error {
    explicit solve_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace delay_spde
