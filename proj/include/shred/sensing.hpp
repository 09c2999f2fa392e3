#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shred/datamodel.hpp"

namespace shred {

enum class NoiseMode { Additive, Multiplicative };

[[nodiscard]] std::string to_string(NoiseMode mode);
/// "additive" | "multiplicative"; throws ConfigError otherwise.
[[nodiscard]] NoiseMode parse_noise_mode(const std::string& text);

/// Point sensors on grid nodes (Dirac sampling of the scaled field).
struct SensorConfig {
    std::vector<std::size_t> positions;  // flattened grid indices
    std::vector<std::string> channels;   // one label per position
    NoiseMode noise_mode = NoiseMode::Additive;
    double sigma = 0.025;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }
};

/// Samples rows `positions` of the scaled snapshot matrix and pollutes them
/// with iid Gaussian noise: y = x + eps (additive) or y = (1 + eps) x.
/// Throws IndexError for positions outside the field.
[[nodiscard]] Eigen::MatrixXd measure(const Eigen::MatrixXd& field_scaled, const SensorConfig& config);

/// Lag-embedded measurement windows. Window k holds columns k-L .. k of the
/// raw matrix (oldest first) as an (L+1) x s matrix; columns before 0 are
/// replaced by column 0.
struct MeasurementTrajectory {
    Eigen::MatrixXd raw;  // s x N_t
    std::size_t lag = 0;
    std::vector<Eigen::MatrixXd> windows;

    [[nodiscard]] std::size_t n_sensors() const noexcept { return static_cast<std::size_t>(raw.rows()); }
    [[nodiscard]] std::size_t n_times() const noexcept { return windows.size(); }
};

[[nodiscard]] MeasurementTrajectory lag_embed(const Eigen::MatrixXd& raw, std::size_t lag);

/// `count` distinct s-subsets of `available`, drawn uniformly without
/// replacement from all C(n, s) subsets. Each subset is sorted. Throws
/// ExhaustionError when count > C(n, s).
[[nodiscard]] std::vector<std::vector<std::size_t>> sample_subsets(const std::vector<std::size_t>& available,
                                                                   std::size_t s, std::size_t count,
                                                                   std::uint64_t seed);

/// Binomial coefficient, saturating at SIZE_MAX.
[[nodiscard]] std::size_t binomial(std::size_t n, std::size_t k) noexcept;

struct Channel {
    std::string label;
    std::size_t column = 0;
    std::vector<std::size_t> positions;  // bottom to top
};

struct ChannelSpec {
    std::size_t ext_column = 3;
    std::size_t reg_column = 56;
    std::size_t n_positions = 20;
    std::size_t row_first = 2;
    std::size_t row_last = 59;
};

/// Vertical stack of equispaced positions in one grid column. Throws
/// GeometryError if the channel leaves the grid or hits a solid cell.
[[nodiscard]] Channel make_channel(const Grid& grid, const std::string& label, std::size_t column,
                                   const ChannelSpec& spec, const std::vector<bool>& solid = {});

/// The "ext" (lateral boundary) and "reg" (behind the obstacle) channels.
[[nodiscard]] std::vector<Channel> define_channels(const Grid& grid, const ChannelSpec& spec,
                                                   const std::vector<bool>& solid = {});

} // namespace shred
