#include "shred/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "shred/error.hpp"
#include "shred/random.hpp"
#include "shred/synthgen.hpp"

namespace shred {

const Channel& Prepared::channel(const std::string& label) const {
    for (const auto& c : channels) {
        if (c.label == label) return c;
    }
    throw ConfigError("unknown channel '" + label + "'");
}

Prepared prepare(FullState state, const RunConfig& config) {
    Prepared p;
    p.grid = state.fields().front().grid();
    p.scaler = fit_scaler(state);
    p.scaled = p.scaler.apply(state);
    p.split = split(state.n_times(), config.data.ratios, derive_seed(config.seed, "split"));

    std::vector<ReducedTrajectory> reduced;
    for (const auto& f : p.scaled.fields()) {
        const auto& x = f.data();
        const auto full = static_cast<std::size_t>(std::min(x.rows(), x.cols()));
        auto basis = truncated_svd(x, full, {}, f.name());
        std::size_t rank = config.data.common_rank;
        if (rank == 0) {
            rank = select_rank(basis.singular_values, config.data.energy);
        } else if (rank > full) {
            throw ConfigError("data.rank " + std::to_string(rank) + " exceeds the " + std::to_string(full) +
                              " available modes");
        }
        basis = truncate(basis, rank);
        reduced.push_back(project(basis, x));
        p.bases.push_back(std::move(basis));
    }
    p.reduced = stack_reduced(reduced);

    auto solid = synthgen::solid_mask(config.solver);
    if (solid.size() != p.grid.size()) solid.clear();
    p.channels = define_channels(p.grid, config.channels, solid);
    p.state = std::move(state);
    return p;
}

namespace {

Eigen::MatrixXd columns_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(cols[k]));
    return out;
}

Evaluation finish(const Prepared& prep, Evaluation eval) {
    eval.reduced_truth = columns_of(prep.reduced.coeffs, eval.columns);
    eval.fields = reconstruct_full(eval.reduced, prep.bases, prep.scaler, prep.reduced);
    for (const auto& est : eval.fields) {
        const Eigen::MatrixXd truth = columns_of(prep.state.field(est.field).data(), eval.columns);
        eval.errors.push_back({est.field, eval.channel, avg_relative_error(truth, est.mean)});
    }
    return eval;
}

} // namespace

Evaluation evaluate(const Prepared& prep, const std::vector<TrainedMember>& members, const std::string& channel) {
    if (prep.split.test.empty()) throw ConfigError("test split is empty");
    Evaluation eval;
    eval.channel = channel;
    eval.columns = prep.split.test;
    eval.reduced = predict_ensemble(members, prep.sensed(), eval.columns);
    return finish(prep, std::move(eval));
}

Evaluation evaluate_oracle(const Prepared& prep, const std::string& channel) {
    if (prep.split.test.empty()) throw ConfigError("test split is empty");
    Evaluation eval;
    eval.channel = channel;
    eval.columns = prep.split.test;
    eval.reduced = aggregate({columns_of(prep.reduced.coeffs, eval.columns)});
    return finish(prep, std::move(eval));
}

double reduced_coverage(const Evaluation& eval, const StackedReduced& layout, std::size_t modes, double k) {
    std::size_t inside = 0, total = 0;
    for (std::size_t f = 0; f < layout.fields.size(); ++f) {
        const auto off = static_cast<Eigen::Index>(layout.offsets[f]);
        const auto n = static_cast<Eigen::Index>(std::min(modes, layout.ranks[f]));
        const auto t = eval.reduced_truth.middleRows(off, n).array();
        const auto m = eval.reduced.mean.middleRows(off, n).array();
        const auto s = eval.reduced.std.middleRows(off, n).array();
        inside += static_cast<std::size_t>(((t - m).abs() <= k * s).count());
        total += static_cast<std::size_t>(t.size());
    }
    return total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
}

UpdateStudy update_study(const Prepared& a, const FullState& b, const std::vector<TrainedMember>& members,
                         const std::string& trained_on, const Channel& monitored, double band) {
    const auto& b_temp = b.field("T").data();
    const auto& a_temp = a.state.field("T").data();
    if (b_temp.rows() != a_temp.rows() || b_temp.cols() != a_temp.cols()) {
        throw DimensionError("perturbed dataset differs in shape from the baseline");
    }
    const auto result = predict_ensemble(members, a.scaler.apply("T", b_temp));

    const auto& layout = a.reduced;
    std::size_t f = 0;
    while (f < layout.fields.size() && layout.fields[f] != "T") ++f;
    if (f == layout.fields.size()) throw DimensionError("reduced state has no temperature block");
    const auto& basis = a.bases[f];
    const Eigen::MatrixXd coeffs = result.mean.middleRows(static_cast<Eigen::Index>(layout.offsets[f]),
                                                          static_cast<Eigen::Index>(layout.ranks[f]));
    const Eigen::MatrixXd estimate = a.scaler.invert("T", lift(basis, coeffs));
    return {trained_on, monitored.label, update_report(a_temp, b_temp, estimate, monitored.positions, band)};
}

// ---------------------------------------------------------------------------
// Artifacts

void write_member_artifacts(const std::vector<TrainedMember>& members, const RunConfig& config,
                            const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> names;
    for (const auto& m : members) {
        const auto stem = "member_" + std::to_string(m.index);
        auto echo = config.ensemble.train;
        echo.seed = member_seeds(config.seed, m.index).batches;
        m.model.save(dir / (stem + ".shrm"), echo);
        save_history_csv(m.history, dir / ("history_" + std::to_string(m.index) + ".csv"));
        names.emplace_back(stem + ".shrm");
    }
    write_manifest(members, config.seed, names, dir / "manifest.txt");
}

std::vector<TrainedMember> load_members(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.txt";
    std::ifstream is(path);
    if (!is) throw ConfigError("no ensemble manifest at " + path.string());
    std::vector<TrainedMember> out;
    for (std::string line; std::getline(is, line);) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag != "member") continue;
        std::size_t index = 0;
        ls >> index;
        SensorConfig sensors;
        std::string channel, checkpoint;
        std::size_t best_epoch = 0;
        for (std::string key; ls >> key;) {
            if (key == "channel") {
                ls >> channel;
            } else if (key == "sensors") {
                std::size_t v;
                while (ls >> v) sensors.positions.push_back(v);
                ls.clear();
            } else if (key == "noise") {
                std::string mode;
                ls >> mode;
                sensors.noise_mode = parse_noise_mode(mode);
            } else if (key == "sigma") {
                ls >> sensors.sigma;
            } else if (key == "noise_seed") {
                ls >> sensors.seed;
            } else if (key == "best_epoch") {
                ls >> best_epoch;
            } else if (key == "checkpoint") {
                ls >> checkpoint;
            } else {
                throw FormatError(path.string() + ": unexpected token '" + key + "'");
            }
        }
        if (checkpoint.empty()) throw FormatError(path.string() + ": member " + std::to_string(index) + " has no checkpoint");
        sensors.channels.assign(sensors.positions.size(), channel);
        auto model = ShredModel::load(dir / checkpoint);
        out.push_back({index, std::move(sensors), std::move(model), {}, best_epoch});
    }
    if (out.empty()) throw FormatError(path.string() + " lists no members");
    return out;
}

void write_split_csv(const SplitIndices& split, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "set,column\n";
    for (auto c : split.train) os << "train," << c << '\n';
    for (auto c : split.valid) os << "valid," << c << '\n';
    for (auto c : split.test) os << "test," << c << '\n';
}

void write_evaluation(const Evaluation& eval, const Prepared& prep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_error_table_csv(eval.errors, dir / "errors.csv");
    write_error_series_csv(eval.errors, dir / "errors_series.csv");

    // Reduced-coefficient comparison, first five modes of every field.
    {
        std::ofstream os(dir / "reduced_coefficients.csv");
        if (!os) throw Error("cannot write reduced coefficient table");
        os << std::setprecision(17) << "field,mode,column,time,truth,mean,std\n";
        const auto& layout = prep.reduced;
        const auto& times = prep.state.times();
        for (std::size_t f = 0; f < layout.fields.size(); ++f) {
            for (std::size_t m = 0; m < std::min<std::size_t>(5, layout.ranks[f]); ++m) {
                const auto row = static_cast<Eigen::Index>(layout.offsets[f] + m);
                for (std::size_t k = 0; k < eval.columns.size(); ++k) {
                    const auto j = static_cast<Eigen::Index>(k);
                    os << layout.fields[f] << ',' << m << ',' << eval.columns[k] << ',' << times[eval.columns[k]] << ','
                       << eval.reduced_truth(row, j) << ',' << eval.reduced.mean(row, j) << ','
                       << eval.reduced.std(row, j) << '\n';
                }
            }
        }
    }

    // Contour quartet at the latest test snapshot.
    const auto latest = std::max_element(eval.columns.begin(), eval.columns.end()) - eval.columns.begin();
    for (const auto& est : eval.fields) {
        const auto col = static_cast<Eigen::Index>(eval.columns[static_cast<std::size_t>(latest)]);
        write_grid_dump(prep.grid, prep.state.field(est.field).data().col(col), est.mean.col(latest),
                        est.std.col(latest), dir / ("grid_" + est.field + ".csv"));
    }
}

} // namespace shred
