#include "switching/pde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "switching/coupling.hpp"

namespace switching {

SpaceGrid default_space_grid(const DiffusionSpec& diffusion, double horizon, int intervals) {
    if (diffusion.dimension() != 1) throw std::invalid_argument("default_space_grid: 1-D diffusion required");
    const double x0 = diffusion.x0[0];
    const double spread = 5.0 * diffusion.sigma[0] * std::sqrt(horizon);
    SpaceGrid g;
    g.intervals = intervals;
    switch (diffusion.family) {
    case DiffusionFamily::geometric_bm: {
        const double drift = std::abs(diffusion.mu[0]) * horizon;
        const double width = std::max(spread + drift, 0.5);
        g.x_min = x0 * std::exp(-width);
        g.x_max = x0 * std::exp(width);
        break;
    }
    case DiffusionFamily::arithmetic_bm: {
        const double drift = std::abs(diffusion.mu[0]) * horizon;
        const double width = std::max(spread + drift, 0.5 * std::max(1.0, std::abs(x0)));
        g.x_min = x0 - width;
        g.x_max = x0 + width;
        break;
    }
    case DiffusionFamily::ornstein_uhlenbeck: {
        const double lo = std::min(x0, diffusion.theta[0]);
        const double hi = std::max(x0, diffusion.theta[0]);
        const double width = std::max(spread, 0.5 * std::max(1.0, std::abs(x0)));
        g.x_min = lo - width;
        g.x_max = hi + width;
        break;
    }
    }
    return g;
}

void require_valid(const SpaceGrid& space, double x0) {
    if (space.intervals < 8) throw std::invalid_argument("space grid: J must be >= 8");
    if (!(space.x_min < x0 && x0 < space.x_max)) {
        throw std::invalid_argument("space grid: x0 must lie strictly inside [x_min, x_max]");
    }
}

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n), d(n), x(n);
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for (std::size_t k = 1; k < n; ++k) {
        const double denom = diag[k] - lower[k] * c[k - 1];
        c[k] = k + 1 < n ? upper[k] / denom : 0.0;
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / denom;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) x[k] = d[k] - c[k] * x[k + 1];
    return x;
}

GridValueField solve_qvi_fd(const SwitchingModel& model, const SpaceGrid& space, double theta) {
    require_valid(model);
    if (model.diffusion.dimension() != 1) throw std::invalid_argument("solve_qvi_fd: 1-D model required");
    require_valid(space, model.diffusion.x0[0]);
    if (!(theta >= 0.5 && theta <= 1.0)) throw std::invalid_argument("solve_qvi_fd: theta must lie in [1/2, 1]");

    const std::size_t q = model.mode_count();
    const int steps = model.grid.steps;
    const int J = space.intervals;
    const double dt = model.grid.dt();
    const double h = space.h();
    const DiffusionSpec& diffusion = model.diffusion;

    std::vector<double> xs(J + 1);
    for (int j = 0; j <= J; ++j) xs[j] = space.x(j);

    GridValueField field(q, std::vector<std::vector<double>>(steps + 1, xs), ValueField::Layout::grid,
                         {.scheme = "qvi_fd", .theta = theta, .boundary = "linear"});

    const int n = J - 1;  // interior unknowns j = 1..J-1
    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    std::vector<double> lo_coef(J + 1), up_coef(J + 1);
    std::vector<std::vector<double>> next(q, std::vector<double>(J + 1, 0.0));
    std::vector<std::vector<double>> solved(q, std::vector<double>(J + 1));
    std::vector<double> cont(q), y(q);

    for (int m = steps - 1; m >= 0; --m) {
        const double t = model.grid.time(m);
        for (int j = 1; j < J; ++j) {
            const double s = diffusion.volatility(t, xs[j]);
            const double b = diffusion.drift(t, xs[j]);
            const double diffusive = 0.5 * s * s / (h * h);
            lo_coef[j] = diffusive + std::max(-b, 0.0) / h;
            up_coef[j] = diffusive + std::max(b, 0.0) / h;
            if (theta < 1.0 && (s * s * dt / (h * h) + std::abs(b) * dt / h > 1.0)) {
                throw std::invalid_argument("solve_qvi_fd: explicit part violates the monotonicity condition "
                                            "sigma^2 dt/h^2 + |b| dt/h <= 1");
            }
        }
        const double implicit = theta * dt;
        const double explicit_part = (1.0 - theta) * dt;

        for (std::size_t i = 0; i < q; ++i) {
            const auto& v = next[i];
            for (int j = 1; j < J; ++j) {
                const int r = j - 1;
                const double av = lo_coef[j] * v[j - 1] - (lo_coef[j] + up_coef[j]) * v[j] + up_coef[j] * v[j + 1];
                rhs[r] = v[j] + explicit_part * av + dt * model.payoffs[i](t, xs[j]);
                lower[r] = -implicit * lo_coef[j];
                upper[r] = -implicit * up_coef[j];
                diag[r] = 1.0 + implicit * (lo_coef[j] + up_coef[j]);
            }
            // Eliminate v_0 = 2 v_1 - v_2 and v_J = 2 v_{J-1} - v_{J-2}.
            diag[0] += 2.0 * lower[0];
            upper[0] -= lower[0];
            diag[n - 1] += 2.0 * upper[n - 1];
            lower[n - 1] -= upper[n - 1];
            const auto interior = solve_tridiagonal(lower, diag, upper, rhs);
            auto& out = solved[i];
            for (int j = 1; j < J; ++j) out[j] = interior[j - 1];
            out[0] = 2.0 * out[1] - out[2];
            out[J] = 2.0 * out[J - 1] - out[J - 2];
        }

        const CostTable costs(model, t);
        for (int j = 0; j <= J; ++j) {
            for (std::size_t i = 0; i < q; ++i) cont[i] = solved[i][j];
            couple_modes(costs, cont, y);
            for (std::size_t i = 0; i < q; ++i) {
                field.continuation(i, m, j) = cont[i];
                field.value(i, m, j) = y[i];
                next[i][j] = y[i];
            }
        }
    }
    return field;
}

} // namespace switching
