#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shred/compression.hpp"
#include "shred/datamodel.hpp"
#include "shred/network.hpp"
#include "shred/sensing.hpp"

namespace shred {

struct EnsembleConfig {
    std::size_t members = 10;
    std::size_t sensors = 3;
    std::size_t lag = 30;
    NoiseMode noise_mode = NoiseMode::Additive;
    double sigma = 0.025;
    std::uint64_t master_seed = 0;
    std::size_t hidden = 64;
    std::size_t lstm_layers = 2;
    std::vector<std::size_t> decoder_widths{350, 400};
    TrainConfig train;   // seed is replaced per member
    std::size_t threads = 0;  // 0: one per hardware thread
};

/// Seeds of member `index` derived from the master seed.
struct MemberSeeds {
    std::uint64_t noise, init, batches;
};
[[nodiscard]] MemberSeeds member_seeds(std::uint64_t master, std::size_t index);

struct TrainedMember {
    std::size_t index = 0;
    SensorConfig sensors;
    ShredModel model;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
};

/// Trains one model per sampled sensor subset of `channel`. Sensors read
/// rows of `sensed_scaled` (the scaled field carrying the sensors); each
/// member gets its own noise realization. Members run concurrently; the
/// first failure aborts the whole ensemble.
[[nodiscard]] std::vector<TrainedMember> train_ensemble(const Eigen::MatrixXd& sensed_scaled,
                                                        const StackedReduced& targets, const SplitIndices& split,
                                                        const Channel& channel, const EnsembleConfig& config);

/// Windows of member `m` for the measurements of `sensed_scaled`, with the
/// member's own sensors, noise mode, sigma and noise seed.
[[nodiscard]] std::vector<Eigen::MatrixXd> member_windows(const TrainedMember& member,
                                                          const Eigen::MatrixXd& sensed_scaled);

struct EnsembleResult {
    std::vector<Eigen::MatrixXd> members;  // each r_total x n
    Eigen::MatrixXd mean;
    Eigen::MatrixXd std;  // population std
};

/// Elementwise mean and population std. Throws ShapeError.
[[nodiscard]] EnsembleResult aggregate(std::vector<Eigen::MatrixXd> members);

/// Predictions of every member on `sensed_scaled`, restricted to `columns`
/// (all columns when empty), aggregated.
[[nodiscard]] EnsembleResult predict_ensemble(const std::vector<TrainedMember>& members,
                                              const Eigen::MatrixXd& sensed_scaled,
                                              const std::vector<std::size_t>& columns = {});

struct FieldEstimate {
    std::string field;
    Eigen::MatrixXd mean;  // n_dofs x n, physical units
    Eigen::MatrixXd std;   // elementwise std of the lifted, unscaled members
};

/// Lifts the ensemble back to physical space. The std is taken over the
/// per-member physical fields. Throws DimensionError.
[[nodiscard]] std::vector<FieldEstimate> reconstruct_full(const EnsembleResult& result,
                                                          const std::vector<SvdBasis>& bases,
                                                          const MinMaxScaler& scaler, const StackedReduced& layout);

/// Text manifest: master seed, member count, subset and checkpoint of each member.
void write_manifest(const std::vector<TrainedMember>& members, std::uint64_t master_seed,
                    const std::vector<std::filesystem::path>& checkpoints, const std::filesystem::path& path);

} // namespace shred
