#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nlsc/errors.hpp"
#include "nlsc/grid.hpp"

namespace nlsc {

enum class KernelKind { Constant, Linear, Tabulated };

inline std::string_view to_string(KernelKind k) {
    switch (k) {
        case KernelKind::Constant: return "constant";
        case KernelKind::Linear: return "linear";
        case KernelKind::Tabulated: return "tabulated";
    }
    return "?";
}

struct KernelSample {
    double offset; ///< r in [-gamma, 0]
    double value;  ///< K(r)
};

/// One-sided look-ahead kernel K supported on [-gamma, 0].
///
/// Since the support lies on r <= 0, (K * u)(x) only sees u on [x, x + gamma].
/// Construction validates hypothesis H1 (nonnegative, nondecreasing on the
/// support); jumps at r = -gamma are admissible and enter the derivative
/// identities only through the tail value K(-gamma+) and head value K(0-).
class KernelSpec {
public:
    static KernelSpec constant(double gamma, double k0 = 1.0) {
        check_gamma(gamma);
        if (!(k0 > 0.0) || !std::isfinite(k0)) throw ValidationError("H1: interaction strength k0 must be positive");
        KernelSpec k;
        k.kind_ = KernelKind::Constant;
        k.gamma_ = gamma;
        k.k0_ = k0;
        return k;
    }

    static KernelSpec linear(double gamma) {
        check_gamma(gamma);
        KernelSpec k;
        k.kind_ = KernelKind::Linear;
        k.gamma_ = gamma;
        return k;
    }

    /// Piecewise-linear kernel through the given samples. The first offset
    /// fixes gamma, the last must be 0.
    static KernelSpec tabulated(std::vector<KernelSample> table) {
        if (table.size() < 2) throw ValidationError("table: at least two samples are required");
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (!std::isfinite(table[i].offset) || !std::isfinite(table[i].value))
                throw ValidationError("table: sample " + std::to_string(i) + " is not finite");
            if (i > 0 && !(table[i].offset > table[i - 1].offset))
                throw ValidationError("table: offsets must be strictly increasing (sample " + std::to_string(i) + ")");
        }
        const double gamma = -table.front().offset;
        check_gamma(gamma);
        if (std::abs(table.back().offset) > 1e-12 * gamma)
            throw ValidationError("H1: support must end at r = 0 (last offset " + std::to_string(table.back().offset) + ")");
        table.back().offset = 0.0;
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (table[i].value < 0.0)
                throw ValidationError("H1: K must be nonnegative (sample " + std::to_string(i) + " at r=" +
                                      std::to_string(table[i].offset) + ")");
            if (i > 0 && table[i].value - table[i - 1].value < -1e-12)
                throw ValidationError("H1: K must be nondecreasing on [-gamma, 0] (samples " + std::to_string(i - 1) +
                                      ", " + std::to_string(i) + ")");
        }
        KernelSpec k;
        k.kind_ = KernelKind::Tabulated;
        k.gamma_ = gamma;
        k.table_ = std::move(table);
        k.prefix_.assign(k.table_.size(), 0.0);
        for (std::size_t i = 1; i < k.table_.size(); ++i) {
            const auto& a = k.table_[i - 1];
            const auto& b = k.table_[i];
            k.prefix_[i] = k.prefix_[i - 1] + 0.5 * (b.offset - a.offset) * (a.value + b.value);
        }
        if (!(k.prefix_.back() > 0.0)) throw ValidationError("H1: kernel must have positive mass");
        return k;
    }

    /// Tabulates `k` at `n` equispaced offsets covering [-gamma, 0].
    static KernelSpec sampled(const KernelSpec& k, std::size_t n) {
        if (n < 2) throw ValidationError("table: at least two samples are required");
        std::vector<KernelSample> table(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = -k.gamma() + k.gamma() * static_cast<double>(i) / static_cast<double>(n - 1);
            table[i] = {r, k.interior(r)};
        }
        table.back().offset = 0.0;
        return tabulated(std::move(table));
    }

    /// Two-column text table: `offset value` per line, '#' starts a comment.
    static KernelSpec load_table(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("table: cannot open " + path.string());
        std::vector<KernelSample> table;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ss(line);
            KernelSample s{};
            if (!(ss >> s.offset)) continue;
            if (!(ss >> s.value))
                throw ValidationError("table: " + path.string() + ":" + std::to_string(lineno) + " needs two columns");
            table.push_back(s);
        }
        return tabulated(std::move(table));
    }

    KernelKind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    double k0() const { return k0_; }
    std::span<const KernelSample> table() const { return table_; }

    /// K(r); zero outside [-gamma, 0].
    double operator()(double r) const {
        if (r > 0.0 || r < -gamma_) return 0.0;
        return interior(r);
    }

    /// Value of the continuous representative on the closed support, with r clamped into it.
    double interior(double r) const {
        const double s = std::clamp(r, -gamma_, 0.0);
        switch (kind_) {
            case KernelKind::Constant: return k0_ / gamma_;
            case KernelKind::Linear: return (2.0 / gamma_) * (1.0 + s / gamma_);
            case KernelKind::Tabulated: {
                auto it = std::upper_bound(table_.begin(), table_.end(), s,
                                           [](double x, const KernelSample& t) { return x < t.offset; });
                if (it == table_.end()) return table_.back().value;
                if (it == table_.begin()) return table_.front().value;
                const auto& b = *it;
                const auto& a = *(it - 1);
                const double w = (s - a.offset) / (b.offset - a.offset);
                return a.value + w * (b.value - a.value);
            }
        }
        return 0.0;
    }

    /// Integral of K over [-gamma, min(r, 0)].
    double cumulative(double r) const {
        if (r <= -gamma_) return 0.0;
        const double s = std::min(r, 0.0);
        switch (kind_) {
            case KernelKind::Constant: return (k0_ / gamma_) * (s + gamma_);
            case KernelKind::Linear: {
                const double q = (s + gamma_) / gamma_;
                return q * q;
            }
            case KernelKind::Tabulated: {
                auto it = std::upper_bound(table_.begin(), table_.end(), s,
                                           [](double x, const KernelSample& t) { return x < t.offset; });
                if (it == table_.end()) return prefix_.back();
                const auto idx = static_cast<std::size_t>(it - table_.begin()) - 1;
                const auto& a = table_[idx];
                return prefix_[idx] + 0.5 * (s - a.offset) * (a.value + interior(s));
            }
        }
        return 0.0;
    }

    /// Integral of K; closed form for the built-in kinds, trapezoid over the table otherwise.
    double l1_norm() const {
        switch (kind_) {
            case KernelKind::Constant: return k0_;
            case KernelKind::Linear: return 1.0;
            case KernelKind::Tabulated: return prefix_.back();
        }
        return 0.0;
    }

    /// Integral of |K'| over the open support (jumps excluded).
    double w11_seminorm() const {
        switch (kind_) {
            case KernelKind::Constant: return 0.0;
            case KernelKind::Linear: return 2.0 / gamma_;
            case KernelKind::Tabulated: {
                double tv = 0.0;
                for (std::size_t i = 1; i < table_.size(); ++i) tv += std::abs(table_[i].value - table_[i - 1].value);
                return tv;
            }
        }
        return 0.0;
    }

    double w11_norm() const { return l1_norm() + w11_seminorm(); }

    /// K(0-), the jump coefficient at the origin.
    double k_at_zero() const { return interior(0.0); }
    /// K(-gamma+), the jump coefficient at the far end of the window.
    double k_at_tail() const { return interior(-gamma_); }

private:
    KernelSpec() = default;

    static void check_gamma(double gamma) {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw ValidationError("H1: look-ahead distance gamma must be positive and finite");
    }

    KernelKind kind_ = KernelKind::Constant;
    double gamma_ = 1.0;
    double k0_ = 1.0;
    std::vector<KernelSample> table_;
    std::vector<double> prefix_;
};

/// Integral of K over its support.
inline double kernel_mass(const KernelSpec& k) { return k.l1_norm(); }

/// Centred differences in the interior; one-sided at constant-extension edges.
inline std::vector<double> slopes(const Grid1D& g, std::span<const double> u) {
    const std::size_t n = g.n_cells;
    std::vector<double> ux(n, 0.0);
    if (n < 2) return ux;
    const double inv2dx = 0.5 / g.dx;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<std::ptrdiff_t>(i);
        ux[i] = (u[g.wrap(ii + 1)] - u[g.wrap(ii - 1)]) * inv2dx;
    }
    if (g.boundary == Boundary::ConstantExtension) {
        ux[0] = (u[1] - u[0]) / g.dx;
        ux[n - 1] = (u[n - 1] - u[n - 2]) / g.dx;
    }
    return ux;
}

/// A kernel bound to a grid, with the translation-invariant quadrature
/// weights precomputed.
///
/// Cell averages are treated as a piecewise-constant reconstruction and
/// integrated exactly against K, so the two partial cells at either end of
/// the window receive fractional weights. Each output cell is a sequential
/// sum in fixed order.
class NonlocalOperator {
public:
    NonlocalOperator(KernelSpec kernel, Grid1D grid) : kernel_(std::move(kernel)), grid_(grid) {
        grid_.check_window(kernel_.gamma());
        const double dx = grid_.dx;
        const double gamma = kernel_.gamma();
        const auto reach = static_cast<std::size_t>(std::floor(gamma / dx + 0.5)) + 2;
        mass_.reserve(reach);
        slope_.reserve(reach);
        for (std::size_t j = 0; j < reach; ++j) {
            const double hi = 0.5 * dx - static_cast<double>(j) * dx;
            const double lo = hi - dx;
            mass_.push_back(kernel_.cumulative(hi) - kernel_.cumulative(lo));
            slope_.push_back(kernel_.interior(hi) - kernel_.interior(lo));
        }
        while (mass_.size() > 1 && mass_.back() == 0.0 && slope_.back() == 0.0) {
            mass_.pop_back();
            slope_.pop_back();
        }
        const double cells = gamma / dx;
        const double nearest = std::round(cells);
        if (std::abs(cells - nearest) < 1e-9 * std::max(1.0, cells)) {
            shift_ = static_cast<std::size_t>(nearest);
            frac_ = 0.0;
        } else {
            shift_ = static_cast<std::size_t>(std::floor(cells));
            frac_ = cells - static_cast<double>(shift_);
        }
        if (kernel_.kind() == KernelKind::Linear)
            box_ = std::make_shared<const NonlocalOperator>(KernelSpec::constant(gamma, 1.0), grid_);
    }

    const KernelSpec& kernel() const { return kernel_; }
    const Grid1D& grid() const { return grid_; }
    std::span<const double> weights() const { return mass_; }

    /// ubar_i = integral of K(x_i - y) u(y) dy.
    std::vector<double> convolve(std::span<const double> u) const {
        check_size(u);
        std::vector<double> out(grid_.n_cells);
        for (std::size_t i = 0; i < grid_.n_cells; ++i) out[i] = apply(mass_, u, i);
        return out;
    }

    /// u evaluated at x_i + gamma by linear interpolation of the cell values.
    double ahead(std::span<const double> u, std::size_t i) const {
        const auto base = static_cast<std::ptrdiff_t>(i + shift_);
        const double a = u[grid_.wrap(base)];
        if (frac_ == 0.0) return a;
        return (1.0 - frac_) * a + frac_ * u[grid_.wrap(base + 1)];
    }

    /// First derivative of K * f for the given cell data f.
    std::vector<double> derivative(std::span<const double> f) const {
        check_size(f);
        const std::size_t n = grid_.n_cells;
        std::vector<double> out(n);
        const double gamma = kernel_.gamma();
        switch (kernel_.kind()) {
            case KernelKind::Constant: {
                const double c = kernel_.k0() / gamma;
                for (std::size_t i = 0; i < n; ++i) out[i] = c * (ahead(f, i) - f[i]);
                break;
            }
            case KernelKind::Linear: {
                const auto avg = box_->convolve(f);
                for (std::size_t i = 0; i < n; ++i) out[i] = -(2.0 / gamma) * (f[i] - avg[i]);
                break;
            }
            case KernelKind::Tabulated: out = quadrature_derivative(f); break;
        }
        return out;
    }

    /// Derivative of K * f computed as  integral K' f  + K(-gamma+) f(x+gamma) - K(0-) f(x),
    /// independent of the closed-form identities used for the built-in kinds.
    std::vector<double> quadrature_derivative(std::span<const double> f) const {
        check_size(f);
        const double head = kernel_.k_at_zero();
        const double tail = kernel_.k_at_tail();
        std::vector<double> out(grid_.n_cells);
        for (std::size_t i = 0; i < grid_.n_cells; ++i)
            out[i] = apply(slope_, f, i) + tail * ahead(f, i) - head * f[i];
        return out;
    }

    struct Derivatives {
        std::vector<double> ubar_x;
        std::vector<double> ubar_xx;
    };

    /// ubar_x and ubar_xx; for the Linear kind ubar_xx uses
    /// -(2/gamma)(u_x - (u(x+gamma) - u(x))/gamma).
    Derivatives derivatives(std::span<const double> u) const {
        const auto ux = slopes(grid_, u);
        Derivatives d;
        d.ubar_x = derivative(u);
        if (kernel_.kind() == KernelKind::Linear) {
            const double gamma = kernel_.gamma();
            d.ubar_xx.resize(grid_.n_cells);
            for (std::size_t i = 0; i < grid_.n_cells; ++i) {
                const double box_x = (ahead(u, i) - u[i]) / gamma;
                d.ubar_xx[i] = -(2.0 / gamma) * (ux[i] - box_x);
            }
        } else {
            d.ubar_xx = derivative(ux);
        }
        return d;
    }

private:
    void check_size(std::span<const double> u) const {
        if (u.size() != grid_.n_cells)
            throw DomainError("array has " + std::to_string(u.size()) + " entries, grid has " +
                              std::to_string(grid_.n_cells) + " cells");
    }

    double apply(const std::vector<double>& w, std::span<const double> u, std::size_t i) const {
        double acc = 0.0;
        if (i + w.size() <= grid_.n_cells) {
            const double* p = u.data() + i;
            for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * p[j];
            return acc;
        }
        const auto base = static_cast<std::ptrdiff_t>(i);
        for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * u[grid_.wrap(base + static_cast<std::ptrdiff_t>(j))];
        return acc;
    }

    KernelSpec kernel_;
    Grid1D grid_;
    std::vector<double> mass_;
    std::vector<double> slope_;
    std::size_t shift_ = 0;
    double frac_ = 0.0;
    std::shared_ptr<const NonlocalOperator> box_;
};

inline std::vector<double> convolve(const KernelSpec& k, const Grid1D& g, std::span<const double> u) {
    return NonlocalOperator(k, g).convolve(u);
}

inline NonlocalOperator::Derivatives nonlocal_derivatives(const KernelSpec& k, const Grid1D& g,
                                                          std::span<const double> u) {
    return NonlocalOperator(k, g).derivatives(u);
}

} // namespace nlsc
