#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace shred {

/// Layer widths of a recurrent encoder + shallow decoder network.
struct NetworkShape {
    std::size_t n_inputs = 3;                         // sensors per window row
    std::size_t hidden = 64;                          // LSTM width, every layer
    std::size_t lstm_layers = 2;
    std::vector<std::size_t> decoder_widths{350, 400};
    std::size_t n_outputs = 0;                        // stacked reduced coefficients

    bool operator==(const NetworkShape&) const = default;
};

/// Which rows of the decoder output belong to which field.
struct OutputLayout {
    std::vector<std::string> fields;
    std::vector<std::size_t> ranks;

    [[nodiscard]] std::size_t total() const noexcept;
    bool operator==(const OutputLayout&) const = default;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 1000;
    std::size_t batch_size = 64;
    std::size_t patience = 50;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Start the output bias at the mean training target.
    bool init_output_bias = false;

    /// Throws ConfigError.
    void validate() const;
};

/// Windows paired with their reduced targets. Window k is (L+1) x s,
/// target column k belongs to window k.
struct SequenceDataset {
    std::vector<Eigen::MatrixXd> windows;
    Eigen::MatrixXd targets;  // r_total x N

    [[nodiscard]] std::size_t size() const noexcept { return windows.size(); }
};

/// SHRED network: stacked LSTM over the window (oldest row first, zero
/// initial state), final top-layer hidden state decoded by affine layers
/// with ReLU between them and a linear output layer.
///
/// Gate blocks are ordered [input, forget, cell, output]. Every parameter
/// lives in one flat vector; the accessors below are views into it.
class ShredModel {
public:
    ShredModel(NetworkShape shape, std::size_t lag, OutputLayout layout);

    [[nodiscard]] const NetworkShape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t lag() const noexcept { return lag_; }
    [[nodiscard]] const OutputLayout& layout() const noexcept { return layout_; }

    [[nodiscard]] Eigen::VectorXd& parameters() noexcept { return params_; }
    [[nodiscard]] const Eigen::VectorXd& parameters() const noexcept { return params_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer; fan_in is the
    /// hidden width for LSTM layers and the input width for affine layers.
    void init_uniform(std::uint64_t seed);

    // Parameter views. LSTM input weights are 4H x in, recurrent 4H x H.
    [[nodiscard]] Eigen::Map<Eigen::MatrixXd> lstm_input_weights(std::size_t layer);
    [[nodiscard]] Eigen::Map<Eigen::MatrixXd> lstm_recurrent_weights(std::size_t layer);
    [[nodiscard]] Eigen::Map<Eigen::VectorXd> lstm_bias(std::size_t layer);
    [[nodiscard]] Eigen::Map<Eigen::MatrixXd> decoder_weights(std::size_t layer);
    [[nodiscard]] Eigen::Map<Eigen::VectorXd> decoder_bias(std::size_t layer);
    [[nodiscard]] std::size_t decoder_layers() const noexcept { return shape_.decoder_widths.size() + 1; }

    /// Latent state z for one (L+1) x s window. Throws ShapeError.
    [[nodiscard]] Eigen::VectorXd encode(const Eigen::MatrixXd& window) const;
    /// Decoder output for one latent vector. Throws ShapeError.
    [[nodiscard]] Eigen::VectorXd decode(const Eigen::VectorXd& z) const;
    /// r_total x N matrix; column k = decode(encode(windows[k])).
    [[nodiscard]] Eigen::MatrixXd predict(const std::vector<Eigen::MatrixXd>& windows) const;

    void save(const std::filesystem::path& path, const TrainConfig& echo = {}) const;
    [[nodiscard]] static ShredModel load(const std::filesystem::path& path, TrainConfig* echo = nullptr);

    bool operator==(const ShredModel& o) const;

private:
    struct Block {
        std::size_t offset, rows, cols;
    };
    [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> view(const Block& b) const;
    [[nodiscard]] Eigen::Map<Eigen::MatrixXd> view(const Block& b);

    friend class BatchEngine;

    NetworkShape shape_;
    std::size_t lag_;
    OutputLayout layout_;
    Eigen::VectorXd params_;
    std::vector<Block> lstm_wx_, lstm_wh_, lstm_b_, dec_w_, dec_b_;
};

/// Mean over the batch of squared l2 errors.
[[nodiscard]] double loss(const ShredModel& model, const SequenceDataset& data, std::span<const std::size_t> batch);

struct LossAndGradient {
    double loss = 0.0;
    Eigen::VectorXd gradient;  // same layout as ShredModel::parameters()
};

/// Exact reverse-mode gradient of `loss`, including backpropagation through
/// time over the whole window.
[[nodiscard]] LossAndGradient gradients(const ShredModel& model, const SequenceDataset& data,
                                        std::span<const std::size_t> batch);

struct EpochRecord {
    std::size_t epoch;
    double train_loss;
    double valid_loss;
};

struct TrainResult {
    ShredModel model;  // parameters with the best validation loss
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double initial_valid_loss = 0.0;
};

/// Mini-batch Adam on `train` indices with early stopping on `valid`.
/// Throws DivergenceError on a non-finite loss.
[[nodiscard]] TrainResult train(ShredModel model, const SequenceDataset& data,
                                const std::vector<std::size_t>& train_idx,
                                const std::vector<std::size_t>& valid_idx, const TrainConfig& config);

void save_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

} // namespace shred
