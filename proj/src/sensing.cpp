#include "shred/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "shred/error.hpp"
#include "shred/random.hpp"

namespace shred {

std::string to_string(NoiseMode mode) { return mode == NoiseMode::Additive ? "additive" : "multiplicative"; }

NoiseMode parse_noise_mode(const std::string& text) {
    if (text == "additive") return NoiseMode::Additive;
    if (text == "multiplicative") return NoiseMode::Multiplicative;
    throw ConfigError("noise mode must be additive or multiplicative, got '" + text + "'");
}

Eigen::MatrixXd measure(const Eigen::MatrixXd& field_scaled, const SensorConfig& config) {
    if (config.positions.empty()) throw IndexError("sensor config has no positions");
    if (config.sigma < 0.0) throw ConfigError("sigma must be non-negative");
    const auto s = static_cast<Eigen::Index>(config.positions.size());
    const auto n_t = field_scaled.cols();
    Eigen::MatrixXd y(s, n_t);
    for (Eigen::Index j = 0; j < s; ++j) {
        const auto pos = config.positions[static_cast<std::size_t>(j)];
        if (pos >= static_cast<std::size_t>(field_scaled.rows())) {
            throw IndexError("sensor position " + std::to_string(pos) + " outside field with " +
                             std::to_string(field_scaled.rows()) + " dofs");
        }
        y.row(j) = field_scaled.row(static_cast<Eigen::Index>(pos));
    }
    if (config.sigma == 0.0) return y;

    Rng rng(config.seed);
    std::normal_distribution<double> noise(0.0, config.sigma);
    // Time-major draw order: the noise at (sensor j, time k) does not depend
    // on how many later instants exist.
    for (Eigen::Index k = 0; k < n_t; ++k) {
        for (Eigen::Index j = 0; j < s; ++j) {
            const double eps = noise(rng);
            if (config.noise_mode == NoiseMode::Additive) {
                y(j, k) += eps;
            } else {
                y(j, k) *= 1.0 + eps;
            }
        }
    }
    return y;
}

MeasurementTrajectory lag_embed(const Eigen::MatrixXd& raw, std::size_t lag) {
    MeasurementTrajectory out;
    out.raw = raw;
    out.lag = lag;
    const auto s = raw.rows();
    const auto n_t = raw.cols();
    const auto len = static_cast<Eigen::Index>(lag) + 1;
    out.windows.reserve(static_cast<std::size_t>(n_t));
    for (Eigen::Index k = 0; k < n_t; ++k) {
        Eigen::MatrixXd w(len, s);
        for (Eigen::Index l = 0; l < len; ++l) {
            const Eigen::Index src = std::max<Eigen::Index>(0, k - static_cast<Eigen::Index>(lag) + l);
            w.row(l) = raw.col(src).transpose();
        }
        out.windows.push_back(std::move(w));
    }
    return out;
}

std::size_t binomial(std::size_t n, std::size_t k) noexcept {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        const std::size_t num = n - k + i;
        if (r > std::numeric_limits<std::size_t>::max() / num) return std::numeric_limits<std::size_t>::max();
        r = r * num / i;
    }
    return r;
}

std::vector<std::vector<std::size_t>> sample_subsets(const std::vector<std::size_t>& available, std::size_t s,
                                                     std::size_t count, std::uint64_t seed) {
    const std::size_t n = available.size();
    if (s == 0 || s > n) throw ExhaustionError("cannot draw " + std::to_string(s) + " of " + std::to_string(n));
    const std::size_t total = binomial(n, s);
    if (count > total) {
        throw ExhaustionError(std::to_string(count) + " subsets requested but only " + std::to_string(total) +
                              " exist");
    }
    Rng rng(seed);
    auto draw_index = [&](std::size_t bound) { return static_cast<std::size_t>(rng() % bound); };

    std::vector<std::vector<std::size_t>> out;
    std::set<std::vector<std::size_t>> seen;
    // Rejection of repeated iid uniform subsets yields a uniform draw
    // without replacement; each subset is a partial Fisher-Yates shuffle.
    while (out.size() < count) {
        std::vector<std::size_t> pool(available);
        for (std::size_t i = 0; i < s; ++i) std::swap(pool[i], pool[i + draw_index(n - i)]);
        std::vector<std::size_t> subset(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
        std::sort(subset.begin(), subset.end());
        if (seen.insert(subset).second) out.push_back(std::move(subset));
    }
    return out;
}

Channel make_channel(const Grid& grid, const std::string& label, std::size_t column, const ChannelSpec& spec,
                     const std::vector<bool>& solid) {
    if (column >= grid.nx) {
        throw GeometryError("channel '" + label + "' at column " + std::to_string(column) + " outside " +
                            std::to_string(grid.nx) + "-wide grid");
    }
    if (spec.n_positions == 0 || spec.row_last >= grid.ny || spec.row_first > spec.row_last) {
        throw GeometryError("channel rows outside the grid");
    }
    if (spec.n_positions > 1 && spec.row_last - spec.row_first + 1 < spec.n_positions) {
        throw GeometryError("channel span too short for the requested positions");
    }
    Channel ch{label, column, {}};
    const double span = static_cast<double>(spec.row_last - spec.row_first);
    for (std::size_t k = 0; k < spec.n_positions; ++k) {
        const double frac = spec.n_positions == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(spec.n_positions - 1);
        const auto row = spec.row_first + static_cast<std::size_t>(std::llround(frac * span));
        const auto idx = grid.index(column, row);
        if (!solid.empty() && solid.at(idx)) {
            throw GeometryError("channel '" + label + "' position row " + std::to_string(row) + " is solid");
        }
        ch.positions.push_back(idx);
    }
    return ch;
}

std::vector<Channel> define_channels(const Grid& grid, const ChannelSpec& spec, const std::vector<bool>& solid) {
    return {make_channel(grid, "ext", spec.ext_column, spec, solid),
            make_channel(grid, "reg", spec.reg_column, spec, solid)};
}

} // namespace shred
