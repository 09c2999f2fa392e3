#include "shred/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "shred/error.hpp"

namespace shred::synthgen {

double heat_flux(double z, const HeatFluxLaw& law) noexcept { return law.a * std::sin(law.b * z + law.c) + law.d; }

SolverConfig default_config() {
    SolverConfig c;
    // Axial power shape peaking mid-rod: B = pi / rod height.
    const double rod_height = 40.0 * c.ly / static_cast<double>(c.ny);
    c.flux = {6.0e-3, std::numbers::pi / rod_height, 0.0, 2.0e-3};
    c.heaters = {
        {14, 16, 8, 48, 1.0},
        {24, 26, 8, 48, 1.0},
        {34, 36, 8, 48, 1.0},
        {44, 46, 8, 48, 0.8},
    };
    // Control-rod analog: unheated, shields the channel between it and the wall.
    c.obstacles = {{54, 56, 6, 52, 0.0}};
    c.recirc_col0 = 4;
    c.recirc_col1 = 12;
    c.recirc_depth = 6;
    return c;
}

std::vector<bool> solid_mask(const SolverConfig& config) {
    std::vector<bool> solid(config.nx * config.ny, false);
    auto mark = [&](const SolidBlock& b) {
        for (std::size_t j = b.row0; j < std::min(b.row1, config.ny); ++j) {
            for (std::size_t i = b.col0; i < std::min(b.col1, config.nx); ++i) solid[j * config.nx + i] = true;
        }
    };
    for (const auto& b : config.heaters) mark(b);
    for (const auto& b : config.obstacles) mark(b);
    return solid;
}

void validate(const SolverConfig& c) {
    if (c.nx < 4 || c.ny < 4) throw ConfigError("grid must be at least 4x4");
    if (!(c.lx > 0 && c.ly > 0 && c.dt > 0)) throw ConfigError("lx, ly, dt must be positive");
    if (!(c.nu > 0 && c.alpha > 0 && c.beta > 0 && c.gravity >= 0)) {
        throw ConfigError("nu, alpha, beta must be positive and gravity non-negative");
    }
    if (c.stride == 0 || c.steps < c.stride) throw ConfigError("need steps >= stride > 0");
    if (!(c.poisson_tol > 0)) throw ConfigError("poisson_tol must be positive");
    const Grid g = c.grid();
    const double diffusion = c.dt * std::max(c.nu, c.alpha) * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy));
    if (diffusion > 0.25) {
        throw CflError("diffusion number " + std::to_string(diffusion) + " exceeds 0.25 for explicit stepping");
    }
    for (const auto* blocks : {&c.heaters, &c.obstacles}) {
        for (const auto& b : *blocks) {
            if (b.col0 >= b.col1 || b.row0 >= b.row1 || b.col1 > c.nx || b.row1 > c.ny) {
                throw ConfigError("solid block outside the grid or empty");
            }
        }
    }
    if (!c.t_initial_field.empty() && c.t_initial_field.size() != c.nx * c.ny) {
        throw ConfigError("t_initial_field must hold one value per cell");
    }
    if (c.recirc_strength != 0.0 && (c.recirc_col1 <= c.recirc_col0 || c.recirc_col1 > c.nx ||
                                     c.recirc_depth == 0 || c.recirc_depth > c.ny)) {
        throw ConfigError("recirculation strip outside the grid");
    }
}

double mixing_length(const Grid& g, std::size_t i, std::size_t j) noexcept {
    const double x = (static_cast<double>(i) + 0.5) * g.dx;
    const double y = (static_cast<double>(j) + 0.5) * g.dy;
    const double lx = static_cast<double>(g.nx) * g.dx;
    const double ly = static_cast<double>(g.ny) * g.dy;
    const double wall = std::min({x, lx - x, y, ly - y});
    return std::max(wall, 0.5 * g.dx);
}

TurbulenceFields turbulence_proxy(const VelocityField& vel, double c_kappa) {
    const Grid& g = vel.grid;
    const auto n = static_cast<Eigen::Index>(g.size());
    if (vel.ux.size() != n || vel.uy.size() != n) throw DimensionError("velocity does not match grid");
    TurbulenceFields out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    auto at = [&](const Eigen::VectorXd& f, std::size_t i, std::size_t j) {
        return f(static_cast<Eigen::Index>(g.index(i, j)));
    };
    // Centered where both neighbours exist, one-sided at the domain edge.
    auto ddx = [&](const Eigen::VectorXd& f, std::size_t i, std::size_t j) {
        if (i == 0) return (at(f, 1, j) - at(f, 0, j)) / g.dx;
        if (i + 1 == g.nx) return (at(f, i, j) - at(f, i - 1, j)) / g.dx;
        return (at(f, i + 1, j) - at(f, i - 1, j)) / (2.0 * g.dx);
    };
    auto ddy = [&](const Eigen::VectorXd& f, std::size_t i, std::size_t j) {
        if (j == 0) return (at(f, i, 1) - at(f, i, 0)) / g.dy;
        if (j + 1 == g.ny) return (at(f, i, j) - at(f, i, j - 1)) / g.dy;
        return (at(f, i, j + 1) - at(f, i, j - 1)) / (2.0 * g.dy);
    };
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double a = ddx(vel.ux, i, j), b = ddy(vel.ux, i, j);
            const double c = ddx(vel.uy, i, j), d = ddy(vel.uy, i, j);
            const double grad2 = a * a + b * b + c * c + d * d;
            const double ell = mixing_length(g, i, j);
            const double kappa = c_kappa * grad2 * ell * ell;
            const auto k = static_cast<Eigen::Index>(g.index(i, j));
            out.kappa(k) = kappa;
            out.omega(k) = std::sqrt(kappa) / ell;
        }
    }
    return out;
}

Perturbation parse_perturbation(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw UnknownPerturbation("expected NAME=VALUE, got '" + text + "'");
    const std::string name = text.substr(0, eq);
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(text.substr(eq + 1), &used);
        if (used != text.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw UnknownPerturbation("bad value in '" + text + "'");
    }
    if (name == "heater_scale") return {PerturbationKind::HeaterScale, value};
    if (name == "top_recirculation") return {PerturbationKind::TopRecirculation, value};
    if (name == "viscosity_scale") return {PerturbationKind::ViscosityScale, value};
    throw UnknownPerturbation("'" + name + "'");
}

SolverConfig perturbed_variant(const SolverConfig& config, const Perturbation& p) {
    SolverConfig out = config;
    switch (p.kind) {
    case PerturbationKind::HeaterScale:
        if (!(p.value > 0)) throw UnknownPerturbation("heater_scale must be positive");
        out.heater_scale *= p.value;
        break;
    case PerturbationKind::TopRecirculation:
        if (p.value < 0) throw UnknownPerturbation("top_recirculation must be non-negative");
        out.recirc_strength = p.value;
        break;
    case PerturbationKind::ViscosityScale:
        if (!(p.value > 0)) throw UnknownPerturbation("viscosity_scale must be positive");
        out.nu *= p.value;
        break;
    default:
        throw UnknownPerturbation("unhandled kind");
    }
    return out;
}

namespace {

/// Staggered (MAC) grid state. u lives on vertical faces ((nx+1) x ny),
/// v on horizontal faces (nx x (ny+1)), T and p at cell centres.
class Solver {
public:
    explicit Solver(const SolverConfig& c) : c_(c), g_(c.grid()), solid_(solid_mask(c)) {
        nx_ = c.nx;
        ny_ = c.ny;
        u_.assign((nx_ + 1) * ny_, 0.0);
        v_.assign(nx_ * (ny_ + 1), 0.0);
        open_u_.assign(u_.size(), false);
        open_v_.assign(v_.size(), false);
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 1; i < nx_; ++i) open_u_[iu(i, j)] = fluid(i - 1, j) && fluid(i, j);
        }
        for (std::size_t j = 1; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) open_v_[iv(i, j)] = fluid(i, j - 1) && fluid(i, j);
        }
        T_.assign(nx_ * ny_, c.t_init);
        if (!c.t_initial_field.empty()) T_ = c.t_initial_field;
        p_.assign(nx_ * ny_, 0.0);
        build_heat_sources();
        build_poisson();
    }

    void step(Diagnostics& diag) {
        momentum_predictor();
        project(diag);
        energy();
        const double cfl = c_.dt * (max_abs(u_) / g_.dx + max_abs(v_) / g_.dy);
        diag.max_cfl = std::max(diag.max_cfl, cfl);
        if (!(cfl < 0.5)) throw CflError("CFL number " + std::to_string(cfl) + " >= 0.5");
    }

    void snapshot(std::size_t col, std::array<Eigen::MatrixXd, 6>& out, Diagnostics& diag) const {
        const auto n = static_cast<Eigen::Index>(nx_ * ny_);
        VelocityField vel{g_, Eigen::VectorXd(n), Eigen::VectorXd(n)};
        double t_sum = 0.0;
        std::size_t n_fluid = 0;
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) {
                const auto k = static_cast<Eigen::Index>(ic(i, j));
                vel.ux(k) = 0.5 * (u_[iu(i, j)] + u_[iu(i + 1, j)]);
                vel.uy(k) = 0.5 * (v_[iv(i, j)] + v_[iv(i, j + 1)]);
                out[0](k, static_cast<Eigen::Index>(col)) = T_[ic(i, j)];
                out[3](k, static_cast<Eigen::Index>(col)) = p_[ic(i, j)];
                if (fluid(i, j)) {
                    t_sum += T_[ic(i, j)];
                    ++n_fluid;
                }
            }
        }
        const auto turb = turbulence_proxy(vel, c_.c_kappa);
        out[1].col(static_cast<Eigen::Index>(col)) = vel.ux;
        out[2].col(static_cast<Eigen::Index>(col)) = vel.uy;
        out[4].col(static_cast<Eigen::Index>(col)) = turb.kappa;
        out[5].col(static_cast<Eigen::Index>(col)) = turb.omega;
        diag.mean_temperature.push_back(t_sum / static_cast<double>(n_fluid));
    }

private:
    [[nodiscard]] std::size_t iu(std::size_t i, std::size_t j) const noexcept { return j * (nx_ + 1) + i; }
    [[nodiscard]] std::size_t iv(std::size_t i, std::size_t j) const noexcept { return j * nx_ + i; }
    [[nodiscard]] std::size_t ic(std::size_t i, std::size_t j) const noexcept { return j * nx_ + i; }
    [[nodiscard]] bool fluid(std::size_t i, std::size_t j) const noexcept { return !solid_[ic(i, j)]; }

    static double max_abs(const std::vector<double>& x) {
        double m = 0.0;
        for (double v : x) m = std::max(m, std::abs(v));
        return m;
    }

    // Tangential neighbour of a face: closed or out-of-range faces act as a
    // no-slip wall half a cell away (ghost value = -self).
    [[nodiscard]] double u_tangential(std::size_t i, std::ptrdiff_t j, double self) const {
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(ny_)) return -self;
        const auto k = iu(i, static_cast<std::size_t>(j));
        return open_u_[k] ? u_[k] : -self;
    }
    [[nodiscard]] double v_tangential(std::ptrdiff_t i, std::size_t j, double self) const {
        if (i < 0 || i >= static_cast<std::ptrdiff_t>(nx_)) return -self;
        const auto k = iv(static_cast<std::size_t>(i), j);
        return open_v_[k] ? v_[k] : -self;
    }

    void momentum_predictor() {
        const double dx = g_.dx, dy = g_.dy, dt = c_.dt, nu = c_.nu;
        const double gb = c_.gravity * c_.beta;
        du_.assign(u_.size(), 0.0);
        dv_.assign(v_.size(), 0.0);
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 1; i < nx_; ++i) {
                const auto k = iu(i, j);
                if (!open_u_[k]) continue;
                const double uc = u_[k];
                const double uw = u_[iu(i - 1, j)], ue = u_[iu(i + 1, j)];
                const double us = u_tangential(i, static_cast<std::ptrdiff_t>(j) - 1, uc);
                const double un = u_tangential(i, static_cast<std::ptrdiff_t>(j) + 1, uc);
                const double vbar = 0.25 * (v_[iv(i - 1, j)] + v_[iv(i, j)] + v_[iv(i - 1, j + 1)] + v_[iv(i, j + 1)]);
                const double adv = uc * (uc > 0 ? (uc - uw) / dx : (ue - uc) / dx) +
                                   vbar * (vbar > 0 ? (uc - us) / dy : (un - uc) / dy);
                const double lap = (ue - 2 * uc + uw) / (dx * dx) + (un - 2 * uc + us) / (dy * dy);
                du_[k] = dt * (-adv + nu * lap);
            }
        }
        const bool recirc = c_.recirc_strength > 0.0;
        for (std::size_t j = 1; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) {
                const auto k = iv(i, j);
                if (!open_v_[k]) continue;
                const double vc = v_[k];
                const double vs = v_[iv(i, j - 1)], vn = v_[iv(i, j + 1)];
                const double vw = v_tangential(static_cast<std::ptrdiff_t>(i) - 1, j, vc);
                const double ve = v_tangential(static_cast<std::ptrdiff_t>(i) + 1, j, vc);
                const double ubar = 0.25 * (u_[iu(i, j - 1)] + u_[iu(i + 1, j - 1)] + u_[iu(i, j)] + u_[iu(i + 1, j)]);
                const double adv = ubar * (ubar > 0 ? (vc - vw) / dx : (ve - vc) / dx) +
                                   vc * (vc > 0 ? (vc - vs) / dy : (vn - vc) / dy);
                const double lap = (ve - 2 * vc + vw) / (dx * dx) + (vn - 2 * vc + vs) / (dy * dy);
                const double t_face = 0.5 * (T_[ic(i, j - 1)] + T_[ic(i, j)]);
                double force = gb * (t_face - c_.t_ref);
                if (recirc && in_recirc_strip(i, j)) {
                    force += c_.recirc_strength * c_.recirc_rate * (-c_.recirc_velocity - vc);
                }
                dv_[k] = dt * (-adv + nu * lap + force);
            }
        }
        for (std::size_t k = 0; k < u_.size(); ++k) u_[k] += du_[k];
        for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += dv_[k];
    }

    [[nodiscard]] bool in_recirc_strip(std::size_t i, std::size_t j) const noexcept {
        return i >= c_.recirc_col0 && i < c_.recirc_col1 && j + c_.recirc_depth >= ny_;
    }

    void build_poisson() {
        eq_of_cell_.assign(nx_ * ny_, -1);
        Eigen::Index n_eq = 0;
        for (std::size_t k = 0; k < nx_ * ny_; ++k) {
            if (!solid_[k]) eq_of_cell_[k] = n_eq++;
        }
        std::vector<Eigen::Triplet<double>> trip;
        const double ax = 1.0 / (g_.dx * g_.dx), ay = 1.0 / (g_.dy * g_.dy);
        auto couple = [&](std::size_t a, std::size_t b, double w) {
            const auto ea = eq_of_cell_[a], eb = eq_of_cell_[b];
            trip.emplace_back(ea, ea, w);
            trip.emplace_back(eb, eb, w);
            trip.emplace_back(ea, eb, -w);
            trip.emplace_back(eb, ea, -w);
        };
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 1; i < nx_; ++i) {
                if (open_u_[iu(i, j)]) couple(ic(i - 1, j), ic(i, j), ax);
            }
        }
        for (std::size_t j = 1; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) {
                if (open_v_[iv(i, j)]) couple(ic(i, j - 1), ic(i, j), ay);
            }
        }
        // One pinned cell per connected fluid region removes the constant
        // null space; with compatible right-hand sides the pin is exact.
        std::vector<int> comp(nx_ * ny_, -1);
        int n_comp = 0;
        for (std::size_t start = 0; start < nx_ * ny_; ++start) {
            if (solid_[start] || comp[start] >= 0) continue;
            std::queue<std::size_t> q;
            q.push(start);
            comp[start] = n_comp;
            trip.emplace_back(eq_of_cell_[start], eq_of_cell_[start], ax);
            while (!q.empty()) {
                const auto k = q.front();
                q.pop();
                const std::size_t i = k % nx_, j = k / nx_;
                auto visit = [&](bool open, std::size_t nb) {
                    if (open && comp[nb] < 0) {
                        comp[nb] = n_comp;
                        q.push(nb);
                    }
                };
                if (i > 0) visit(open_u_[iu(i, j)], ic(i - 1, j));
                if (i + 1 < nx_) visit(open_u_[iu(i + 1, j)], ic(i + 1, j));
                if (j > 0) visit(open_v_[iv(i, j)], ic(i, j - 1));
                if (j + 1 < ny_) visit(open_v_[iv(i, j + 1)], ic(i, j + 1));
            }
            ++n_comp;
        }
        laplacian_.resize(n_eq, n_eq);
        laplacian_.setFromTriplets(trip.begin(), trip.end());
        cholesky_.compute(laplacian_);
        if (cholesky_.info() != Eigen::Success) throw PoissonDivergenceError("pressure matrix factorization failed");
        rhs_.resize(n_eq);
    }

    void project(Diagnostics& diag) {
        const double dx = g_.dx, dy = g_.dy, dt = c_.dt;
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) {
                const auto e = eq_of_cell_[ic(i, j)];
                if (e < 0) continue;
                const double div = (u_[iu(i + 1, j)] - u_[iu(i, j)]) / dx + (v_[iv(i, j + 1)] - v_[iv(i, j)]) / dy;
                rhs_(e) = -div / dt;
            }
        }
        phi_ = cholesky_.solve(rhs_);
        const double rhs_norm = rhs_.norm();
        if (rhs_norm > 0.0) {
            const double rel = (laplacian_ * phi_ - rhs_).norm() / rhs_norm;
            diag.max_poisson_residual = std::max(diag.max_poisson_residual, rel);
            if (!(rel <= c_.poisson_tol)) {
                throw PoissonDivergenceError("relative residual " + std::to_string(rel) + " above tolerance");
            }
        }
        const double mean = phi_.size() > 0 ? phi_.mean() : 0.0;
        for (std::size_t k = 0; k < nx_ * ny_; ++k) {
            const auto e = eq_of_cell_[k];
            p_[k] = e < 0 ? 0.0 : phi_(e) - mean;
        }
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 1; i < nx_; ++i) {
                if (open_u_[iu(i, j)]) u_[iu(i, j)] -= dt * (p_[ic(i, j)] - p_[ic(i - 1, j)]) / dx;
            }
        }
        for (std::size_t j = 1; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) {
                if (open_v_[iv(i, j)]) v_[iv(i, j)] -= dt * (p_[ic(i, j)] - p_[ic(i, j - 1)]) / dy;
            }
        }
        double max_div = 0.0;
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) {
                if (!fluid(i, j)) continue;
                const double div = (u_[iu(i + 1, j)] - u_[iu(i, j)]) / dx + (v_[iv(i, j + 1)] - v_[iv(i, j)]) / dy;
                max_div = std::max(max_div, std::abs(div));
            }
        }
        diag.max_divergence = std::max(diag.max_divergence, max_div);
    }

    void build_heat_sources() {
        source_.assign(nx_ * ny_, 0.0);
        auto add_face = [&](std::size_t i, std::size_t j, const SolidBlock& h) {
            const double z = (static_cast<double>(j) + 0.5 - static_cast<double>(h.row0)) * g_.dy;
            // Flux through a vertical face of length dy into a dx*dy cell.
            source_[ic(i, j)] += h.power * heat_flux(z, c_.flux) / g_.dx;
        };
        for (const auto& h : c_.heaters) {
            if (h.power == 0.0) continue;
            for (std::size_t j = h.row0; j < h.row1; ++j) {
                if (h.col0 > 0 && fluid(h.col0 - 1, j)) add_face(h.col0 - 1, j, h);
                if (h.col1 < nx_ && fluid(h.col1, j)) add_face(h.col1, j, h);
            }
        }
    }

    void energy() {
        const double dx = g_.dx, dy = g_.dy, dt = c_.dt, a = c_.alpha;
        dT_.assign(T_.size(), 0.0);
        // Finite-volume fluxes face by face: what leaves one cell enters its
        // neighbour, so closed boundaries conserve sum(T) exactly.
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 1; i < nx_; ++i) {
                if (!open_u_[iu(i, j)]) continue;
                const double uf = u_[iu(i, j)];
                const double tw = T_[ic(i - 1, j)], te = T_[ic(i, j)];
                const double flux = uf * (uf > 0 ? tw : te) - a * (te - tw) / dx;
                dT_[ic(i - 1, j)] -= flux / dx;
                dT_[ic(i, j)] += flux / dx;
            }
        }
        for (std::size_t j = 1; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) {
                if (!open_v_[iv(i, j)]) continue;
                const double vf = v_[iv(i, j)];
                const double ts = T_[ic(i, j - 1)], tn = T_[ic(i, j)];
                const double flux = vf * (vf > 0 ? ts : tn) - a * (tn - ts) / dy;
                dT_[ic(i, j - 1)] -= flux / dy;
                dT_[ic(i, j)] += flux / dy;
            }
        }
        if (c_.top_dirichlet) {
            const std::size_t j = ny_ - 1;
            for (std::size_t i = 0; i < nx_; ++i) {
                if (fluid(i, j)) dT_[ic(i, j)] += a * (c_.t_top - T_[ic(i, j)]) / (0.5 * dy) / dy;
            }
        }
        const double scale = c_.heater_scale;
        const bool recirc = c_.recirc_strength > 0.0;
        const double t_cold = c_.t_top - c_.recirc_delta_t;
        for (std::size_t j = 0; j < ny_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) {
                const auto k = ic(i, j);
                if (solid_[k]) continue;
                double d = dT_[k] + scale * source_[k];
                if (recirc && in_recirc_strip(i, j)) d += c_.recirc_strength * c_.recirc_rate * (t_cold - T_[k]);
                T_[k] += dt * d;
            }
        }
    }

    const SolverConfig& c_;
    Grid g_;
    std::vector<bool> solid_;
    std::size_t nx_ = 0, ny_ = 0;
    std::vector<double> u_, v_, du_, dv_, T_, dT_, p_, source_;
    std::vector<bool> open_u_, open_v_;
    std::vector<Eigen::Index> eq_of_cell_;
    Eigen::SparseMatrix<double> laplacian_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> cholesky_;
    Eigen::VectorXd rhs_, phi_;
};

} // namespace

SimulationResult simulate(const SolverConfig& config) {
    validate(config);
    Solver solver(config);
    const Grid g = config.grid();
    const std::size_t n_t = config.steps / config.stride;
    std::array<Eigen::MatrixXd, 6> data;
    for (auto& m : data) m.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(n_t));
    std::vector<double> times;
    times.reserve(n_t);

    SimulationResult result;
    std::size_t col = 0;
    for (std::size_t s = 1; s <= n_t * config.stride; ++s) {
        solver.step(result.diagnostics);
        if (s % config.stride == 0) {
            solver.snapshot(col++, data, result.diagnostics);
            times.push_back(static_cast<double>(s) * config.dt);
        }
    }
    std::vector<FieldSnapshotSet> fields;
    for (std::size_t f = 0; f < data.size(); ++f) {
        fields.emplace_back(std::string(kFieldOrder[f]), std::move(data[f]), g, times);
    }
    result.state = FullState(std::move(fields));
    return result;
}

} // namespace shred::synthgen
