#include "shred/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

#include "shred/binary_io.hpp"
#include "shred/error.hpp"
#include "shred/random.hpp"

namespace shred {

namespace {

// Eigen's double tanh is scalar; this form vectorizes through exp and is
// exact to a few ulps in absolute terms.
template <typename A>
auto fast_tanh(const A& x) {
    using S = typename A::Scalar;
    return S(1) - S(2) / ((S(2) * x).exp() + S(1));
}

} // namespace

std::size_t OutputLayout::total() const noexcept { return std::accumulate(ranks.begin(), ranks.end(), std::size_t{0}); }

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
    if (epochs == 0) throw ConfigError("epoch budget must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (patience == 0 || patience > epochs) throw ConfigError("patience must be in [1, epochs]");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("moment decays must be in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

// ---------------------------------------------------------------------------
// ShredModel

ShredModel::ShredModel(NetworkShape shape, std::size_t lag, OutputLayout layout)
    : shape_(std::move(shape)), lag_(lag), layout_(std::move(layout)) {
    if (shape_.n_inputs == 0 || shape_.hidden == 0 || shape_.lstm_layers == 0 || shape_.n_outputs == 0) {
        throw ShapeError("network widths must be positive");
    }
    for (auto w : shape_.decoder_widths) {
        if (w == 0) throw ShapeError("decoder widths must be positive");
    }
    if (!layout_.ranks.empty() && layout_.total() != shape_.n_outputs) {
        throw ShapeError("output layout totals " + std::to_string(layout_.total()) + " but network emits " +
                         std::to_string(shape_.n_outputs));
    }
    if (layout_.fields.size() != layout_.ranks.size()) throw ShapeError("output layout fields/ranks mismatch");

    std::size_t offset = 0;
    auto take = [&](std::size_t rows, std::size_t cols) {
        Block b{offset, rows, cols};
        offset += rows * cols;
        return b;
    };
    const std::size_t h = shape_.hidden;
    for (std::size_t l = 0; l < shape_.lstm_layers; ++l) {
        const std::size_t in = l == 0 ? shape_.n_inputs : h;
        lstm_wx_.push_back(take(4 * h, in));
        lstm_wh_.push_back(take(4 * h, h));
        lstm_b_.push_back(take(4 * h, 1));
    }
    std::size_t in = h;
    for (std::size_t d = 0; d <= shape_.decoder_widths.size(); ++d) {
        const std::size_t out = d < shape_.decoder_widths.size() ? shape_.decoder_widths[d] : shape_.n_outputs;
        dec_w_.push_back(take(out, in));
        dec_b_.push_back(take(out, 1));
        in = out;
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

Eigen::Map<const Eigen::MatrixXd> ShredModel::view(const Block& b) const {
    return {params_.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
}
Eigen::Map<Eigen::MatrixXd> ShredModel::view(const Block& b) {
    return {params_.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
}

Eigen::Map<Eigen::MatrixXd> ShredModel::lstm_input_weights(std::size_t layer) { return view(lstm_wx_.at(layer)); }
Eigen::Map<Eigen::MatrixXd> ShredModel::lstm_recurrent_weights(std::size_t layer) { return view(lstm_wh_.at(layer)); }
Eigen::Map<Eigen::VectorXd> ShredModel::lstm_bias(std::size_t layer) {
    const auto& b = lstm_b_.at(layer);
    return {params_.data() + b.offset, static_cast<Eigen::Index>(b.rows)};
}
Eigen::Map<Eigen::MatrixXd> ShredModel::decoder_weights(std::size_t layer) { return view(dec_w_.at(layer)); }
Eigen::Map<Eigen::VectorXd> ShredModel::decoder_bias(std::size_t layer) {
    const auto& b = dec_b_.at(layer);
    return {params_.data() + b.offset, static_cast<Eigen::Index>(b.rows)};
}

void ShredModel::init_uniform(std::uint64_t seed) {
    Rng rng(seed);
    auto fill = [&](const Block& b, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t k = 0; k < b.rows * b.cols; ++k) params_[static_cast<Eigen::Index>(b.offset + k)] = u(rng);
    };
    const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(shape_.hidden));
    for (std::size_t l = 0; l < shape_.lstm_layers; ++l) {
        fill(lstm_wx_[l], lstm_bound);
        fill(lstm_wh_[l], lstm_bound);
        fill(lstm_b_[l], lstm_bound);
    }
    for (std::size_t d = 0; d < dec_w_.size(); ++d) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(dec_w_[d].cols));
        fill(dec_w_[d], bound);
        fill(dec_b_[d], bound);
    }
}

bool ShredModel::operator==(const ShredModel& o) const {
    return shape_ == o.shape_ && lag_ == o.lag_ && layout_ == o.layout_ && params_.size() == o.params_.size() &&
           std::memcmp(params_.data(), o.params_.data(), static_cast<std::size_t>(params_.size()) * sizeof(double)) == 0;
}

// ---------------------------------------------------------------------------
// Batched forward / backward. Sequences are laid out column-wise: column
// t*B + b holds time step t of batch member b.

class BatchEngine {
public:
    template <typename S>
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

    template <typename S>
    struct Layer {
        Mat<S> wx, wh;
        Eigen::Matrix<S, Eigen::Dynamic, 1> b;
    };
    template <typename S>
    struct Params {
        std::vector<Layer<S>> lstm;
        std::vector<Mat<S>> w;
        std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>> b;
    };

    template <typename S>
    static Params<S> unpack(const ShredModel& m) {
        Params<S> p;
        for (std::size_t l = 0; l < m.shape_.lstm_layers; ++l) {
            p.lstm.push_back({m.view(m.lstm_wx_[l]).cast<S>(), m.view(m.lstm_wh_[l]).cast<S>(),
                              m.view(m.lstm_b_[l]).col(0).cast<S>()});
        }
        for (std::size_t d = 0; d < m.dec_w_.size(); ++d) {
            p.w.push_back(m.view(m.dec_w_[d]).cast<S>());
            p.b.push_back(m.view(m.dec_b_[d]).col(0).cast<S>());
        }
        return p;
    }

    template <typename S>
    struct Cache {
        std::size_t steps = 0, batch = 0;
        std::vector<Mat<S>> input;  // per layer: in x (T*B)
        std::vector<Mat<S>> gates;  // per layer: activated [i f g o], 4H x (T*B)
        std::vector<Mat<S>> cell;   // per layer: H x (T*B)
        std::vector<Mat<S>> tanh_cell;
        std::vector<Mat<S>> hidden;  // per layer: H x (T*B)
        std::vector<Mat<S>> act;     // decoder: act[0] = z, act[d+1] = output of layer d
    };

    template <typename S>
    static Mat<S> gather_inputs(const ShredModel& m, const std::vector<Eigen::MatrixXd>& windows,
                                std::span<const std::size_t> idx) {
        const std::size_t steps = m.lag_ + 1;
        const std::size_t batch = idx.size();
        const auto s = static_cast<Eigen::Index>(m.shape_.n_inputs);
        Mat<S> x(s, static_cast<Eigen::Index>(steps * batch));
        for (std::size_t b = 0; b < batch; ++b) {
            const auto& w = windows.at(idx[b]);
            if (w.rows() != static_cast<Eigen::Index>(steps) || w.cols() != s) {
                throw ShapeError("window " + std::to_string(idx[b]) + " is " + std::to_string(w.rows()) + "x" +
                                 std::to_string(w.cols()) + ", expected " + std::to_string(steps) + "x" +
                                 std::to_string(s));
            }
            for (std::size_t t = 0; t < steps; ++t) {
                x.col(static_cast<Eigen::Index>(t * batch + b)) = w.row(static_cast<Eigen::Index>(t)).transpose().cast<S>();
            }
        }
        return x;
    }

    template <typename S>
    static void forward(const ShredModel& m, const Params<S>& p, Mat<S> x, std::size_t batch, Cache<S>& c) {
        const std::size_t steps = m.lag_ + 1;
        const auto h = static_cast<Eigen::Index>(m.shape_.hidden);
        const auto bsz = static_cast<Eigen::Index>(batch);
        c.steps = steps;
        c.batch = batch;
        const std::size_t layers = p.lstm.size();
        c.input.resize(layers);
        c.gates.resize(layers);
        c.cell.resize(layers);
        c.tanh_cell.resize(layers);
        c.hidden.resize(layers);
        for (std::size_t l = 0; l < layers; ++l) {
            c.input[l] = l == 0 ? std::move(x) : c.hidden[l - 1];
            const auto& lp = p.lstm[l];
            Mat<S>& g = c.gates[l];
            g.noalias() = lp.wx * c.input[l];
            g.colwise() += lp.b;
            Mat<S>& cell = c.cell[l];
            Mat<S>& tc = c.tanh_cell[l];
            Mat<S>& hs = c.hidden[l];
            cell.resize(h, g.cols());
            tc.resize(h, g.cols());
            hs.resize(h, g.cols());
            for (std::size_t t = 0; t < steps; ++t) {
                const auto col = static_cast<Eigen::Index>(t) * bsz;
                auto gt = g.middleCols(col, bsz);
                if (t > 0) gt.noalias() += lp.wh * hs.middleCols(col - bsz, bsz);
                auto lo = [&](Eigen::Index r) { return gt.middleRows(r * h, h).array(); };
                lo(0) = S(1) / (S(1) + (-lo(0)).exp());
                lo(1) = S(1) / (S(1) + (-lo(1)).exp());
                lo(2) = fast_tanh(lo(2));
                lo(3) = S(1) / (S(1) + (-lo(3)).exp());
                auto ct = cell.middleCols(col, bsz).array();
                if (t > 0) {
                    ct = lo(1) * cell.middleCols(col - bsz, bsz).array() + lo(0) * lo(2);
                } else {
                    ct = lo(0) * lo(2);
                }
                tc.middleCols(col, bsz).array() = fast_tanh(ct);
                hs.middleCols(col, bsz).array() = lo(3) * tc.middleCols(col, bsz).array();
            }
        }
        const std::size_t dec = p.w.size();
        c.act.resize(dec + 1);
        c.act[0] = c.hidden.back().middleCols(static_cast<Eigen::Index>(steps - 1) * bsz, bsz);
        for (std::size_t d = 0; d < dec; ++d) {
            c.act[d + 1].noalias() = p.w[d] * c.act[d];
            c.act[d + 1].colwise() += p.b[d];
            if (d + 1 < dec) c.act[d + 1] = c.act[d + 1].cwiseMax(S(0));
        }
    }

    /// Accumulates dL/dparams into `grad` (same layout as the model). `dout`
    /// is dL/d(output), r_total x B.
    template <typename S>
    static void backward(const ShredModel& m, const Params<S>& p, const Cache<S>& c, Mat<S> dout,
                         Eigen::Matrix<S, Eigen::Dynamic, 1>& grad) {
        auto gview = [&](const ShredModel::Block& b) {
            return Eigen::Map<Mat<S>>(grad.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                                      static_cast<Eigen::Index>(b.cols));
        };
        const std::size_t dec = p.w.size();
        Mat<S> delta = std::move(dout);
        for (std::size_t d = dec; d-- > 0;) {
            gview(m.dec_w_[d]).noalias() += delta * c.act[d].transpose();
            gview(m.dec_b_[d]) += delta.rowwise().sum();
            Mat<S> up = p.w[d].transpose() * delta;
            if (d > 0) up = (c.act[d].array() > S(0)).select(up.array(), S(0)).matrix();
            delta = std::move(up);
        }
        // delta is now dL/dz, the top hidden state at the final step.
        const auto h = static_cast<Eigen::Index>(m.shape_.hidden);
        const auto bsz = static_cast<Eigen::Index>(c.batch);
        const auto steps = static_cast<Eigen::Index>(c.steps);
        const auto cols = steps * bsz;

        Mat<S> dh_above = Mat<S>::Zero(h, cols);
        dh_above.middleCols((steps - 1) * bsz, bsz) = delta;
        for (std::size_t l = p.lstm.size(); l-- > 0;) {
            const auto& lp = p.lstm[l];
            const Mat<S>& g = c.gates[l];
            Mat<S> dg(4 * h, cols);
            Mat<S> dh_next = Mat<S>::Zero(h, bsz);
            Mat<S> dc_next = Mat<S>::Zero(h, bsz);
            for (Eigen::Index t = steps - 1; t >= 0; --t) {
                const auto col = t * bsz;
                auto gi = g.block(0, col, h, bsz).array();
                auto gf = g.block(h, col, h, bsz).array();
                auto gg = g.block(2 * h, col, h, bsz).array();
                auto go = g.block(3 * h, col, h, bsz).array();
                auto tc = c.tanh_cell[l].middleCols(col, bsz).array();

                const Mat<S> dh = dh_above.middleCols(col, bsz) + dh_next;
                const Mat<S> dc = (dc_next.array() + dh.array() * go * (S(1) - tc.square())).matrix();
                dg.block(0, col, h, bsz).array() = dc.array() * gg * gi * (S(1) - gi);
                if (t > 0) {
                    dg.block(h, col, h, bsz).array() =
                        dc.array() * c.cell[l].middleCols(col - bsz, bsz).array() * gf * (S(1) - gf);
                } else {
                    dg.block(h, col, h, bsz).setZero();
                }
                dg.block(2 * h, col, h, bsz).array() = dc.array() * gi * (S(1) - gg.square());
                dg.block(3 * h, col, h, bsz).array() = dh.array() * tc * go * (S(1) - go);
                dc_next = (dc.array() * gf).matrix();
                if (t > 0) dh_next.noalias() = lp.wh.transpose() * dg.middleCols(col, bsz);
            }
            gview(m.lstm_wx_[l]).noalias() += dg * c.input[l].transpose();
            if (steps > 1) {
                gview(m.lstm_wh_[l]).noalias() +=
                    dg.rightCols(cols - bsz) * c.hidden[l].leftCols(cols - bsz).transpose();
            }
            gview(m.lstm_b_[l]) += dg.rowwise().sum();
            if (l > 0) dh_above.noalias() = lp.wx.transpose() * dg;
        }
    }

    template <typename S>
    static Mat<S> run(const ShredModel& m, const Params<S>& p, const std::vector<Eigen::MatrixXd>& windows,
                      std::span<const std::size_t> idx, Cache<S>& cache) {
        forward(m, p, gather_inputs<S>(m, windows, idx), idx.size(), cache);
        return cache.act.back();
    }
};

namespace {

template <typename S>
using Mat = BatchEngine::Mat<S>;

void check_targets(const ShredModel& model, const SequenceDataset& data, std::span<const std::size_t> batch) {
    if (data.targets.rows() != static_cast<Eigen::Index>(model.shape().n_outputs)) {
        throw ShapeError("targets have " + std::to_string(data.targets.rows()) + " rows, network emits " +
                         std::to_string(model.shape().n_outputs));
    }
    if (static_cast<std::size_t>(data.targets.cols()) != data.windows.size()) {
        throw ShapeError("dataset has " + std::to_string(data.windows.size()) + " windows but " +
                         std::to_string(data.targets.cols()) + " targets");
    }
    for (auto k : batch) {
        if (k >= data.windows.size()) throw ShapeError("batch index " + std::to_string(k) + " out of range");
    }
}

template <typename S>
Mat<S> gather_targets(const SequenceDataset& data, std::span<const std::size_t> batch) {
    Mat<S> y(data.targets.rows(), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        y.col(static_cast<Eigen::Index>(b)) = data.targets.col(static_cast<Eigen::Index>(batch[b])).cast<S>();
    }
    return y;
}

/// Sum (not mean) of squared errors over `batch`, evaluated in chunks.
template <typename S>
double sum_squared_error(const ShredModel& model, const BatchEngine::Params<S>& p, const SequenceDataset& data,
                         std::span<const std::size_t> batch, std::size_t chunk = 128) {
    double total = 0.0;
    BatchEngine::Cache<S> cache;
    for (std::size_t start = 0; start < batch.size(); start += chunk) {
        const auto part = batch.subspan(start, std::min(chunk, batch.size() - start));
        const Mat<S> out = BatchEngine::run(model, p, data.windows, part, cache);
        total += static_cast<double>((out - gather_targets<S>(data, part)).squaredNorm());
    }
    return total;
}

template <typename S>
double batch_gradient(const ShredModel& model, const BatchEngine::Params<S>& p, const SequenceDataset& data,
                      std::span<const std::size_t> batch, Eigen::Matrix<S, Eigen::Dynamic, 1>& grad) {
    BatchEngine::Cache<S> cache;
    const Mat<S> out = BatchEngine::run(model, p, data.windows, batch, cache);
    const Mat<S> resid = out - gather_targets<S>(data, batch);
    const S scale = S(2) / static_cast<S>(batch.size());
    grad.setZero(static_cast<Eigen::Index>(model.parameter_count()));
    BatchEngine::backward(model, p, cache, Mat<S>(scale * resid), grad);
    return static_cast<double>(resid.squaredNorm()) / static_cast<double>(batch.size());
}

} // namespace

Eigen::VectorXd ShredModel::encode(const Eigen::MatrixXd& window) const {
    const std::vector<Eigen::MatrixXd> one{window};
    const std::size_t idx = 0;
    const auto p = BatchEngine::unpack<double>(*this);
    BatchEngine::Cache<double> cache;
    BatchEngine::forward(*this, p, BatchEngine::gather_inputs<double>(*this, one, {&idx, 1}), 1, cache);
    return cache.act[0].col(0);
}

Eigen::VectorXd ShredModel::decode(const Eigen::VectorXd& z) const {
    if (z.size() != static_cast<Eigen::Index>(shape_.hidden)) {
        throw ShapeError("latent vector has length " + std::to_string(z.size()) + ", expected " +
                         std::to_string(shape_.hidden));
    }
    Eigen::VectorXd a = z;
    for (std::size_t d = 0; d < dec_w_.size(); ++d) {
        Eigen::VectorXd next = view(dec_w_[d]) * a + view(dec_b_[d]).col(0);
        if (d + 1 < dec_w_.size()) next = next.cwiseMax(0.0);
        a = std::move(next);
    }
    return a;
}

Eigen::MatrixXd ShredModel::predict(const std::vector<Eigen::MatrixXd>& windows) const {
    const auto p = BatchEngine::unpack<double>(*this);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(shape_.n_outputs), static_cast<Eigen::Index>(windows.size()));
    std::vector<std::size_t> idx(windows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    BatchEngine::Cache<double> cache;
    constexpr std::size_t chunk = 128;
    for (std::size_t start = 0; start < idx.size(); start += chunk) {
        const std::size_t n = std::min(chunk, idx.size() - start);
        out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) =
            BatchEngine::run(*this, p, windows, std::span<const std::size_t>(idx).subspan(start, n), cache);
    }
    return out;
}

double loss(const ShredModel& model, const SequenceDataset& data, std::span<const std::size_t> batch) {
    check_targets(model, data, batch);
    if (batch.empty()) return 0.0;
    const auto p = BatchEngine::unpack<double>(model);
    return sum_squared_error(model, p, data, batch) / static_cast<double>(batch.size());
}

LossAndGradient gradients(const ShredModel& model, const SequenceDataset& data, std::span<const std::size_t> batch) {
    check_targets(model, data, batch);
    LossAndGradient out;
    if (batch.empty()) {
        out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.parameter_count()));
        return out;
    }
    const auto p = BatchEngine::unpack<double>(model);
    out.loss = batch_gradient(model, p, data, batch, out.gradient);
    return out;
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(ShredModel model, const SequenceDataset& data, const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& valid_idx, const TrainConfig& config) {
    config.validate();
    if (train_idx.empty()) throw ConfigError("training split is empty");
    if (valid_idx.empty()) throw ConfigError("validation split is empty");
    check_targets(model, data, train_idx);
    check_targets(model, data, valid_idx);

    if (config.init_output_bias) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(data.targets.rows());
        for (auto k : train_idx) mean += data.targets.col(static_cast<Eigen::Index>(k));
        model.decoder_bias(model.decoder_layers() - 1) = mean / static_cast<double>(train_idx.size());
    }

    auto valid_loss = [&](const ShredModel& m) {
        const auto p = BatchEngine::unpack<double>(m);
        return sum_squared_error(m, p, data, valid_idx) / static_cast<double>(valid_idx.size());
    };

    TrainResult result{model, {}, 0, valid_loss(model)};
    double best = result.initial_valid_loss;
    std::size_t since_best = 0;

    Rng rng(derive_seed(config.seed, "batches"));
    std::vector<std::size_t> order(train_idx);
    const auto n_params = static_cast<Eigen::Index>(model.parameter_count());
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n_params);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n_params);
    Eigen::VectorXd grad;
    double b1t = 1.0, b2t = 1.0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

        double train_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto batch =
                std::span<const std::size_t>(order).subspan(start, std::min(config.batch_size, order.size() - start));
            const auto p = BatchEngine::unpack<double>(model);
            const double l = batch_gradient(model, p, data, batch, grad);
            if (!std::isfinite(l) || !grad.allFinite()) {
                throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
            }
            train_sum += l * static_cast<double>(batch.size());

            b1t *= config.beta1;
            b2t *= config.beta2;
            m1 = config.beta1 * m1 + (1.0 - config.beta1) * grad;
            m2 = config.beta2 * m2 + (1.0 - config.beta2) * grad.cwiseAbs2();
            const double step = config.learning_rate / (1.0 - b1t);
            const double corr2 = 1.0 / (1.0 - b2t);
            model.parameters().array() -= step * m1.array() / ((m2.array() * corr2).sqrt() + config.epsilon);
        }

        const double vl = valid_loss(model);
        if (!std::isfinite(vl)) throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
        result.history.push_back({epoch, train_sum / static_cast<double>(order.size()), vl});
        if (vl < best) {
            best = vl;
            result.model = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    return result;
}

void save_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "epoch,train_loss,valid_loss\n" << std::setprecision(17);
    for (const auto& r : history) os << r.epoch << ',' << r.train_loss << ',' << r.valid_loss << '\n';
    if (!os) throw Error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {
constexpr std::uint16_t kCheckpointVersion = 1;
}

void ShredModel::save(const std::filesystem::path& path, const TrainConfig& echo) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    io::write_magic(os, "SHRM");
    io::write_u16(os, kCheckpointVersion);
    io::write_u64(os, shape_.n_inputs);
    io::write_u64(os, shape_.hidden);
    io::write_u64(os, shape_.lstm_layers);
    io::write_u64(os, shape_.decoder_widths.size());
    for (auto w : shape_.decoder_widths) io::write_u64(os, w);
    io::write_u64(os, shape_.n_outputs);
    io::write_u64(os, lag_);
    io::write_u64(os, layout_.fields.size());
    for (std::size_t f = 0; f < layout_.fields.size(); ++f) {
        io::write_string(os, layout_.fields[f]);
        io::write_u64(os, layout_.ranks[f]);
    }
    io::write_f64(os, echo.learning_rate);
    io::write_u64(os, echo.epochs);
    io::write_u64(os, echo.batch_size);
    io::write_u64(os, echo.patience);
    io::write_u64(os, echo.seed);
    io::write_f64(os, echo.beta1);
    io::write_f64(os, echo.beta2);
    io::write_f64(os, echo.epsilon);
    io::write_u16(os, echo.init_output_bias ? 1 : 0);
    io::write_u64(os, static_cast<std::uint64_t>(params_.size()));
    io::write_f64_array(os, params_.data(), static_cast<std::size_t>(params_.size()));
    if (!os) throw Error("failed writing " + path.string());
}

ShredModel ShredModel::load(const std::filesystem::path& path, TrainConfig* echo) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    io::expect_magic(is, "SHRM");
    if (const auto v = io::read_u16(is); v != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(v));
    }
    constexpr std::uint64_t kMaxWidth = 1 << 20;
    auto width = [&](const char* what) {
        const auto w = io::read_u64(is);
        if (w > kMaxWidth) throw FormatError(std::string("implausible ") + what + " " + std::to_string(w));
        return static_cast<std::size_t>(w);
    };
    NetworkShape shape;
    shape.n_inputs = width("input width");
    shape.hidden = width("hidden width");
    shape.lstm_layers = width("layer count");
    shape.decoder_widths.resize(width("decoder depth"));
    for (auto& w : shape.decoder_widths) w = width("decoder width");
    shape.n_outputs = width("output width");
    const auto lag = width("lag");
    OutputLayout layout;
    const auto n_fields = width("field count");
    for (std::size_t f = 0; f < n_fields; ++f) {
        layout.fields.push_back(io::read_string(is));
        layout.ranks.push_back(width("rank"));
    }
    TrainConfig cfg;
    cfg.learning_rate = io::read_f64(is);
    cfg.epochs = io::read_u64(is);
    cfg.batch_size = io::read_u64(is);
    cfg.patience = io::read_u64(is);
    cfg.seed = io::read_u64(is);
    cfg.beta1 = io::read_f64(is);
    cfg.beta2 = io::read_f64(is);
    cfg.epsilon = io::read_f64(is);
    cfg.init_output_bias = io::read_u16(is) != 0;

    ShredModel model(std::move(shape), lag, std::move(layout));
    const auto n = io::read_u64(is);
    if (n != model.parameter_count()) {
        throw DimensionError("checkpoint holds " + std::to_string(n) + " parameters, shape needs " +
                             std::to_string(model.parameter_count()));
    }
    io::read_exact(is, model.params_.data(), model.parameter_count() * sizeof(double));
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint");
    if (echo) *echo = cfg;
    return model;
}

} // namespace shred
