#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shred/datamodel.hpp"

namespace shred::synthgen {

/// Axis-aligned block of solid cells, half-open ranges [col0, col1) x [row0, row1).
struct SolidBlock {
    std::size_t col0 = 0, col1 = 0;
    std::size_t row0 = 0, row1 = 0;
    /// Multiplies the heat-flux law on this block's side faces; 0 for an
    /// unheated obstacle.
    double power = 0.0;

    [[nodiscard]] bool contains(std::size_t i, std::size_t j) const noexcept {
        return i >= col0 && i < col1 && j >= row0 && j < row1;
    }
};

/// Coefficients of q''(z) = A sin(B z + C) + D, z measured from a heater's
/// bottom edge. Units are K m/s (flux already divided by rho c_p).
struct HeatFluxLaw {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
};

/// q''(z) = A sin(B z + C) + D.
[[nodiscard]] double heat_flux(double z, const HeatFluxLaw& law) noexcept;

struct SolverConfig {
    std::size_t nx = 64, ny = 64;
    double lx = 0.5, ly = 0.5;           // m
    double dt = 0.02;                    // s
    double nu = 2.0e-4;                  // m^2/s
    double alpha = 2.0e-4;               // m^2/s
    double beta = 2.0e-4;                // 1/K
    double gravity = 9.81;               // m/s^2, acts along -y
    double t_ref = 300.0;                // K, Boussinesq reference temperature
    double t_init = 300.0;               // K, initial uniform temperature
    double t_top = 300.0;                // K, top strip temperature
    bool top_dirichlet = true;           // false -> adiabatic top
    HeatFluxLaw flux{};
    double heater_scale = 1.0;
    std::vector<SolidBlock> heaters;
    std::vector<SolidBlock> obstacles;
    std::size_t steps = 50000;
    std::size_t stride = 100;
    double poisson_tol = 1e-8;
    double c_kappa = 0.01;
    /// Cold plunging strip under the top boundary (pool recirculation
    /// analog). strength 0 disables it.
    double recirc_strength = 0.0;
    std::size_t recirc_col0 = 0, recirc_col1 = 0, recirc_depth = 0;
    double recirc_velocity = 0.01;       // m/s, forcing target at strength 1
    double recirc_delta_t = 10.0;        // K below t_top at strength 1
    double recirc_rate = 0.5;            // 1/s relaxation rate
    std::uint64_t seed = 0;
    /// Optional nonuniform initial temperature (one value per cell).
    std::vector<double> t_initial_field;

    [[nodiscard]] Grid grid() const noexcept {
        return {nx, ny, lx / static_cast<double>(nx), ly / static_cast<double>(ny)};
    }
};

/// Default desk-scale geometry: four heated rods, a low-power control-rod
/// obstacle near the right wall, heated transient from rest.
[[nodiscard]] SolverConfig default_config();

/// Throws Error subclasses for inconsistent configs (including a diffusion
/// number that makes the explicit scheme unstable).
void validate(const SolverConfig& config);

struct Diagnostics {
    double max_divergence = 0.0;        // over every projection step, 1/s
    double max_poisson_residual = 0.0;  // relative
    double max_cfl = 0.0;
    std::vector<double> mean_temperature;  // per snapshot, fluid cells
};

struct SimulationResult {
    FullState state;
    Diagnostics diagnostics;
};

/// Runs the transient and returns snapshots of T, ux, uy, p, kappa, omega
/// at every `stride` steps (N_t = steps / stride, first snapshot after one stride).
/// Throws CflError, PoissonDivergenceError.
[[nodiscard]] SimulationResult simulate(const SolverConfig& config);

/// Cell-centered velocity field of one snapshot.
struct VelocityField {
    Grid grid;
    Eigen::VectorXd ux;
    Eigen::VectorXd uy;
};

struct TurbulenceFields {
    Eigen::VectorXd kappa;
    Eigen::VectorXd omega;
};

/// kappa = c_kappa |grad u|^2 l^2, omega = sqrt(kappa) / l, l = max(wall distance, dx/2).
[[nodiscard]] TurbulenceFields turbulence_proxy(const VelocityField& velocity, double c_kappa);

/// Mixing length at cell centre (i, j).
[[nodiscard]] double mixing_length(const Grid& grid, std::size_t i, std::size_t j) noexcept;

enum class PerturbationKind { HeaterScale, TopRecirculation, ViscosityScale };

struct Perturbation {
    PerturbationKind kind;
    double value;
};

/// Parses "heater_scale=1.02" style strings. Throws UnknownPerturbation.
[[nodiscard]] Perturbation parse_perturbation(const std::string& text);

[[nodiscard]] SolverConfig perturbed_variant(const SolverConfig& config, const Perturbation& perturbation);

/// Solid mask (true = solid) implied by the config's heaters and obstacles.
[[nodiscard]] std::vector<bool> solid_mask(const SolverConfig& config);

} // namespace shred::synthgen
