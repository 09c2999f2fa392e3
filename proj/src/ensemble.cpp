#include "shred/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <iomanip>
#include <mutex>
#include <optional>
#include <thread>

#include "shred/error.hpp"
#include "shred/random.hpp"

namespace shred {

MemberSeeds member_seeds(std::uint64_t master, std::size_t index) {
    return {derive_seed(master, "noise", index), derive_seed(master, "init", index),
            derive_seed(master, "batches", index)};
}

std::vector<Eigen::MatrixXd> member_windows(const TrainedMember& member, const Eigen::MatrixXd& sensed_scaled) {
    return lag_embed(measure(sensed_scaled, member.sensors), member.model.lag()).windows;
}

namespace {

TrainedMember train_member(std::size_t index, const std::vector<std::size_t>& subset, const Channel& channel,
                           const Eigen::MatrixXd& sensed_scaled, const StackedReduced& targets,
                           const SplitIndices& split, const EnsembleConfig& config) {
    const auto seeds = member_seeds(config.master_seed, index);
    SensorConfig sensors{subset, std::vector<std::string>(subset.size(), channel.label), config.noise_mode,
                         config.sigma, seeds.noise};

    NetworkShape shape{subset.size(), config.hidden, config.lstm_layers, config.decoder_widths,
                       targets.total_rank()};
    ShredModel model(shape, config.lag, OutputLayout{targets.fields, targets.ranks});
    model.init_uniform(seeds.init);

    SequenceDataset data{lag_embed(measure(sensed_scaled, sensors), config.lag).windows, targets.coeffs};
    TrainConfig tc = config.train;
    tc.seed = seeds.batches;
    auto trained = train(std::move(model), data, split.train, split.valid, tc);
    return {index, std::move(sensors), std::move(trained.model), std::move(trained.history), trained.best_epoch};
}

} // namespace

std::vector<TrainedMember> train_ensemble(const Eigen::MatrixXd& sensed_scaled, const StackedReduced& targets,
                                          const SplitIndices& split, const Channel& channel,
                                          const EnsembleConfig& config) {
    if (config.members == 0) throw ConfigError("ensemble needs at least one member");
    if (static_cast<std::size_t>(sensed_scaled.cols()) != static_cast<std::size_t>(targets.coeffs.cols())) {
        throw DimensionError("sensed field and targets disagree on the number of snapshots");
    }
    const auto subsets =
        sample_subsets(channel.positions, config.sensors, config.members, derive_seed(config.master_seed, "subsets"));

    std::size_t workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, config.members);

    std::vector<std::optional<TrainedMember>> out(config.members);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (std::size_t k; !failed && (k = next++) < config.members;) {
            try {
                out[k] = train_member(k, subsets[k], channel, sensed_scaled, targets, split, config);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::future<void>> running;
    for (std::size_t w = 1; w < workers; ++w) running.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : running) f.get();
    if (first_error) std::rethrow_exception(first_error);

    std::vector<TrainedMember> members;
    members.reserve(config.members);
    for (auto& m : out) members.push_back(std::move(*m));
    return members;
}

EnsembleResult aggregate(std::vector<Eigen::MatrixXd> members) {
    if (members.empty()) throw ShapeError("cannot aggregate an empty ensemble");
    const auto rows = members.front().rows();
    const auto cols = members.front().cols();
    for (const auto& m : members) {
        if (m.rows() != rows || m.cols() != cols) throw ShapeError("ensemble members differ in shape");
    }
    EnsembleResult r;
    const auto n = static_cast<double>(members.size());
    r.mean = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& m : members) r.mean += m;
    r.mean /= n;
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& m : members) var.array() += (m - r.mean).array().square();
    r.std = (var / n).cwiseSqrt();
    r.members = std::move(members);
    return r;
}

EnsembleResult predict_ensemble(const std::vector<TrainedMember>& members, const Eigen::MatrixXd& sensed_scaled,
                                const std::vector<std::size_t>& columns) {
    std::vector<Eigen::MatrixXd> preds;
    preds.reserve(members.size());
    for (const auto& m : members) {
        auto windows = member_windows(m, sensed_scaled);
        if (!columns.empty()) {
            std::vector<Eigen::MatrixXd> picked;
            picked.reserve(columns.size());
            for (auto c : columns) picked.push_back(std::move(windows.at(c)));
            windows = std::move(picked);
        }
        preds.push_back(m.model.predict(windows));
    }
    return aggregate(std::move(preds));
}

std::vector<FieldEstimate> reconstruct_full(const EnsembleResult& result, const std::vector<SvdBasis>& bases,
                                            const MinMaxScaler& scaler, const StackedReduced& layout) {
    if (result.mean.rows() != static_cast<Eigen::Index>(layout.total_rank())) {
        throw DimensionError("ensemble output has " + std::to_string(result.mean.rows()) + " rows, layout needs " +
                             std::to_string(layout.total_rank()));
    }
    auto basis_of = [&](const std::string& field) -> const SvdBasis& {
        for (const auto& b : bases) {
            if (b.field == field) return b;
        }
        throw DimensionError("no basis for field '" + field + "'");
    };
    std::vector<FieldEstimate> out;
    for (std::size_t f = 0; f < layout.fields.size(); ++f) {
        const auto& name = layout.fields[f];
        const auto& basis = basis_of(name);
        const auto off = static_cast<Eigen::Index>(layout.offsets[f]);
        const auto rank = static_cast<Eigen::Index>(layout.ranks[f]);
        if (static_cast<Eigen::Index>(basis.rank()) != rank) {
            throw DimensionError("basis '" + name + "' has rank " + std::to_string(basis.rank()) + ", layout " +
                                 std::to_string(rank));
        }
        FieldEstimate est{name, scaler.invert(name, lift(basis, result.mean.middleRows(off, rank))), {}};
        Eigen::MatrixXd var = Eigen::MatrixXd::Zero(est.mean.rows(), est.mean.cols());
        for (const auto& m : result.members) {
            var.array() += (scaler.invert(name, lift(basis, m.middleRows(off, rank))) - est.mean).array().square();
        }
        est.std = (var / static_cast<double>(result.members.size())).cwiseSqrt();
        out.push_back(std::move(est));
    }
    return out;
}

void write_manifest(const std::vector<TrainedMember>& members, std::uint64_t master_seed,
                    const std::vector<std::filesystem::path>& checkpoints, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << std::setprecision(17) << "master_seed " << master_seed << '\n' << "members " << members.size() << '\n';
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& m = members[k];
        os << "member " << m.index << " channel " << (m.sensors.channels.empty() ? "" : m.sensors.channels.front())
           << " sensors";
        for (auto p : m.sensors.positions) os << ' ' << p;
        os << " noise " << to_string(m.sensors.noise_mode) << " sigma " << m.sensors.sigma << " noise_seed "
           << m.sensors.seed << " best_epoch " << m.best_epoch;
        if (k < checkpoints.size()) os << " checkpoint " << checkpoints[k].string();
        os << '\n';
    }
    if (!os) throw Error("failed writing " + path.string());
}

} // namespace shred
