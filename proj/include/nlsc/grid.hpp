#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "nlsc/errors.hpp"

namespace nlsc {

enum class Boundary { Periodic, ConstantExtension };

inline std::string_view to_string(Boundary b) {
    return b == Boundary::Periodic ? "periodic" : "constant_extension";
}

inline Boundary boundary_from_string(std::string_view s) {
    if (s == "periodic") return Boundary::Periodic;
    if (s == "constant_extension" || s == "constant") return Boundary::ConstantExtension;
    throw DomainError("unknown boundary '" + std::string(s) + "'");
}

/// Uniform cell-centred grid on [x_left, x_left + n_cells*dx].
struct Grid1D {
    std::size_t n_cells = 0;
    double x_left = 0.0;
    double dx = 0.0;
    Boundary boundary = Boundary::Periodic;

    Grid1D() = default;
    Grid1D(std::size_t n, double left, double spacing, Boundary b)
        : n_cells(n), x_left(left), dx(spacing), boundary(b) {
        if (n == 0) throw DomainError("grid needs at least one cell");
        if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("grid spacing must be positive");
        if (!std::isfinite(left)) throw DomainError("grid left edge must be finite");
    }

    static Grid1D uniform(double left, double length, std::size_t n, Boundary b) {
        if (n == 0) throw DomainError("grid needs at least one cell");
        return Grid1D(n, left, length / static_cast<double>(n), b);
    }

    double length() const { return static_cast<double>(n_cells) * dx; }
    double center(std::size_t i) const { return x_left + (static_cast<double>(i) + 0.5) * dx; }

    /// Maps a (possibly out-of-range) cell index onto a stored cell.
    std::size_t wrap(std::ptrdiff_t i) const {
        const auto n = static_cast<std::ptrdiff_t>(n_cells);
        if (boundary == Boundary::Periodic) {
            auto r = i % n;
            return static_cast<std::size_t>(r < 0 ? r + n : r);
        }
        if (i < 0) return 0;
        if (i >= n) return n_cells - 1;
        return static_cast<std::size_t>(i);
    }

    /// Throws unless a kernel of look-ahead `gamma` can be used on this grid.
    void check_window(double gamma) const {
        if (boundary == Boundary::Periodic && !(length() > 2.0 * gamma)) {
            throw DomainError("periodic domain length " + std::to_string(length()) +
                              " must exceed twice the look-ahead distance " + std::to_string(gamma));
        }
    }
};

} // namespace nlsc
