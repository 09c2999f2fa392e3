// shred: generate data, train sensor ensembles, evaluate reconstructions and
// run the model-update study from one config file.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "shred/binary_io.hpp"
#include "shred/config.hpp"
#include "shred/error.hpp"
#include "shred/pipeline.hpp"
#include "shred/random.hpp"
#include "shred/synthgen.hpp"

namespace fs = std::filesystem;
using namespace shred;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : Error {
    using Error::Error;
};

struct Options {
    std::string config;
    std::string channel;
    std::size_t ensemble = 0, sensors = 0, lags = 0;
    double sigma = -1.0;
    std::string noise;
    std::string seed;
    std::string oracle;
    std::vector<std::string> perturb;
    std::string out;
    std::string target;  // inspect
};

/// Collects artifacts and timings; written last through a rename.
class RunManifest {
public:
    RunManifest(const RunConfig& config, std::string command) : config_(config), command_(std::move(command)) {}

    void artifact(const fs::path& p) { artifacts_.push_back(p); }
    void time(const std::string& stage, double seconds) { timings_.emplace_back(stage, seconds); }

    void write(const fs::path& dir) const {
        for (const auto& a : artifacts_) {
            if (!fs::exists(a)) throw Error("artifact missing at exit: " + a.string());
        }
        const auto final_path = dir / ("run_manifest_" + command_ + ".txt");
        const auto tmp = final_path.string() + ".tmp";
        {
            std::ofstream os(tmp);
            os << "tool shred " << kVersion << '\n'
               << "command " << command_ << '\n'
               << "config " << config_.source.string() << '\n'
               << "master_seed " << config_.seed << '\n'
               << "split_seed " << derive_seed(config_.seed, "split") << '\n'
               << "subset_seed " << derive_seed(config_.seed, "subsets") << '\n';
            for (const auto& a : artifacts_) os << "artifact " << a.string() << '\n';
            for (const auto& [stage, s] : timings_) os << "seconds " << stage << ' ' << s << '\n';
            if (!os) throw Error("cannot write run manifest");
        }
        fs::rename(tmp, final_path);
    }

private:
    const RunConfig& config_;
    std::string command_;
    std::vector<fs::path> artifacts_;
    std::vector<std::pair<std::string, double>> timings_;
};

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

RunConfig resolve(const Options& o) {
    RunConfig c = load_config(o.config);
    if (!o.channel.empty()) {
        if (o.channel != "ext" && o.channel != "reg") throw UsageError("--channel must be ext or reg");
        c.channel = o.channel;
    }
    if (o.ensemble) c.ensemble.members = o.ensemble;
    if (o.sensors) c.ensemble.sensors = o.sensors;
    if (o.lags) c.ensemble.lag = o.lags;
    if (o.sigma >= 0.0) c.ensemble.sigma = o.sigma;
    if (!o.noise.empty()) c.ensemble.noise_mode = parse_noise_mode(o.noise);
    if (!o.seed.empty()) {
        try {
            std::size_t used = 0;
            c.seed = std::stoull(o.seed, &used);
            if (used != o.seed.size()) throw std::invalid_argument(o.seed);
        } catch (const std::exception&) {
            throw UsageError("--seed expects an unsigned integer");
        }
        c.ensemble.master_seed = c.seed;
        c.solver.seed = c.seed;
    }
    if (!o.perturb.empty()) {
        c.perturbations.clear();
        for (const auto& p : o.perturb) c.perturbations.push_back(synthgen::parse_perturbation(p));
    }
    if (!o.out.empty()) c.out = o.out;
    if (!o.oracle.empty() && o.oracle != "svd") throw UsageError("--oracle accepts only 'svd'");
    return c;
}

fs::path dataset_path(const RunConfig& c) { return c.out / "dataset.bin"; }
fs::path perturbed_path(const RunConfig& c) { return c.out / "dataset_perturbed.bin"; }

FullState load_dataset(const fs::path& path) {
    if (!fs::exists(path)) throw UsageError("dataset not found at " + path.string() + " (run gen-data first)");
    return load_state(path);
}

void print_errors(const Evaluation& e) {
    for (const auto& r : e.errors) {
        std::cout << "  " << r.field << " eps2 = " << r.error.average * 100.0 << " %";
        if (!r.error.skipped.empty()) std::cout << " (" << r.error.skipped.size() << " zero-norm columns skipped)";
        std::cout << '\n';
    }
}

void write_diagnostics(const synthgen::SimulationResult& sim, const fs::path& path) {
    std::ofstream os(path);
    os << std::setprecision(17) << "time,mean_temperature\n";
    const auto& times = sim.state.times();
    for (std::size_t k = 0; k < times.size(); ++k) os << times[k] << ',' << sim.diagnostics.mean_temperature[k] << '\n';
    os << "# max_divergence " << sim.diagnostics.max_divergence << '\n'
       << "# max_poisson_residual " << sim.diagnostics.max_poisson_residual << '\n'
       << "# max_cfl " << sim.diagnostics.max_cfl << '\n';
}

int cmd_gen_data(const RunConfig& c) {
    RunManifest manifest(c, "gen-data");
    Stopwatch clock;
    fs::create_directories(c.out);
    const auto sim = synthgen::simulate(c.solver);
    save_state(sim.state, dataset_path(c));
    write_diagnostics(sim, c.out / "solver_diagnostics.csv");
    manifest.artifact(dataset_path(c));
    manifest.artifact(c.out / "solver_diagnostics.csv");
    manifest.time("baseline", clock.lap());
    std::cout << "wrote " << dataset_path(c).string() << " (" << sim.state.n_times() << " snapshots, max div "
              << sim.diagnostics.max_divergence << ")\n";

    if (!c.perturbations.empty()) {
        auto variant = c.solver;
        for (const auto& p : c.perturbations) variant = synthgen::perturbed_variant(variant, p);
        const auto b = synthgen::simulate(variant);
        save_state(b.state, perturbed_path(c));
        write_diagnostics(b, c.out / "solver_diagnostics_perturbed.csv");
        manifest.artifact(perturbed_path(c));
        manifest.artifact(c.out / "solver_diagnostics_perturbed.csv");
        manifest.time("perturbed", clock.lap());
        std::cout << "wrote " << perturbed_path(c).string() << '\n';
    }
    manifest.write(c.out);
    return 0;
}

int cmd_train(const RunConfig& c) {
    RunManifest manifest(c, "train-" + c.channel);
    Stopwatch clock;
    const auto prep = prepare(load_dataset(dataset_path(c)), c);
    save_bases(prep.bases, c.out / "bases.bin");
    export_spectra_csv(prep.bases, c.out / "spectra.csv");
    write_split_csv(prep.split, c.out / "split.csv");
    manifest.artifact(c.out / "bases.bin");
    manifest.artifact(c.out / "spectra.csv");
    manifest.artifact(c.out / "split.csv");
    manifest.time("prepare", clock.lap());

    std::cout << "ranks:";
    for (std::size_t f = 0; f < prep.reduced.fields.size(); ++f) {
        std::cout << ' ' << prep.reduced.fields[f] << '=' << prep.reduced.ranks[f];
    }
    std::cout << "\ntraining " << c.ensemble.members << " members on channel " << c.channel << '\n';

    const auto members = train_ensemble(prep.sensed(), prep.reduced, prep.split, prep.channel(c.channel), c.ensemble);
    const auto dir = c.out / c.channel;
    write_member_artifacts(members, c, dir);
    manifest.artifact(dir / "manifest.txt");
    for (const auto& m : members) manifest.artifact(dir / ("member_" + std::to_string(m.index) + ".shrm"));
    manifest.time("train", clock.lap());
    manifest.write(c.out);
    return 0;
}

int cmd_evaluate(const RunConfig& c, bool oracle) {
    RunManifest manifest(c, oracle ? "evaluate-oracle" : "evaluate-" + c.channel);
    Stopwatch clock;
    const auto prep = prepare(load_dataset(dataset_path(c)), c);
    if (prep.split.test.empty()) throw UsageError("test split is empty");
    Evaluation eval;
    fs::path dir;
    if (oracle) {
        eval = evaluate_oracle(prep);
        dir = c.out / "oracle";
    } else {
        dir = c.out / c.channel;
        if (!fs::exists(dir / "manifest.txt")) throw UsageError("no trained ensemble in " + dir.string());
        eval = evaluate(prep, load_members(dir), c.channel);
    }
    write_evaluation(eval, prep, dir);
    manifest.artifact(dir / "errors.csv");
    manifest.artifact(dir / "reduced_coefficients.csv");
    manifest.time("evaluate", clock.lap());
    std::cout << (oracle ? "truncation floor" : "channel " + c.channel) << " (test set):\n";
    print_errors(eval);
    if (!oracle) {
        std::cout << "  coverage +-1 std " << reduced_coverage(eval, prep.reduced, 5, 1.0) << ", +-2 std "
                  << reduced_coverage(eval, prep.reduced, 5, 2.0) << '\n';
    }
    manifest.write(c.out);
    return 0;
}

int cmd_update(const RunConfig& c) {
    RunManifest manifest(c, "update-experiment");
    Stopwatch clock;
    if (!fs::exists(perturbed_path(c))) {
        throw UsageError("perturbed dataset missing at " + perturbed_path(c).string() +
                         " (run gen-data with --perturb)");
    }
    const auto prep = prepare(load_dataset(dataset_path(c)), c);
    const auto b = load_state(perturbed_path(c));
    const auto dir = c.out / "update";
    fs::create_directories(dir);
    int studies = 0;
    for (const auto& trained : prep.channels) {
        const auto member_dir = c.out / trained.label;
        if (!fs::exists(member_dir / "manifest.txt")) continue;
        for (const auto& monitored : prep.channels) {
            if (monitored.label == trained.label) continue;
            const auto study = update_study(prep, b, load_members(member_dir), trained.label, monitored);
            const auto prefix = "train_" + trained.label + "_monitor_" + monitored.label;
            write_update_report(study.traces, prep.state.times(), dir, prefix);
            manifest.artifact(dir / (prefix + "_summary.csv"));
            std::cout << "trained on " << trained.label << ", monitored " << monitored.label << ": SHRED closer to B at "
                      << study.closer() * 100.0 << " % of locations\n";
            ++studies;
        }
    }
    if (studies == 0) throw UsageError("no trained ensemble found under " + c.out.string());
    manifest.time("update", clock.lap());
    manifest.write(c.out);
    return 0;
}

int cmd_inspect(const std::string& target) {
    std::ifstream is(target, std::ios::binary);
    if (!is) throw UsageError("cannot open " + target);
    char magic[5] = {};
    is.read(magic, 4);
    is.seekg(0);
    const std::string m(magic);
    if (m == "SHRD") {
        const auto s = load_state(target);
        std::cout << "dataset: " << s.size() << " fields, " << s.n_times() << " snapshots, t = [" << s.times().front()
                  << ", " << s.times().back() << "] s\n";
        for (const auto& f : s.fields()) {
            std::cout << "  " << f.name() << ": " << f.grid().nx << "x" << f.grid().ny << " dx=" << f.grid().dx
                      << " range [" << f.data().minCoeff() << ", " << f.data().maxCoeff() << "]\n";
        }
    } else if (m == "SHRB") {
        for (const auto& b : load_bases(target)) {
            std::cout << b.field << ": rank " << b.rank() << " of " << b.singular_values.size()
                      << ", retained energy " << b.retained_energy() << '\n';
        }
    } else if (m == "SHRM") {
        TrainConfig echo;
        const auto model = ShredModel::load(target, &echo);
        const auto& sh = model.shape();
        std::cout << "checkpoint: inputs " << sh.n_inputs << ", lstm " << sh.lstm_layers << "x" << sh.hidden
                  << ", decoder";
        for (auto w : sh.decoder_widths) std::cout << ' ' << w;
        std::cout << " -> " << sh.n_outputs << ", lag " << model.lag() << ", " << model.parameter_count()
                  << " parameters\n  trained with lr " << echo.learning_rate << ", epochs " << echo.epochs
                  << ", batch " << echo.batch_size << ", patience " << echo.patience << '\n';
    } else {
        throw UsageError(target + " is not a shred container");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-sensor field reconstruction with recurrent decoder ensembles"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Config file")->required();
        sub->add_option("--out", o.out, "Output directory (overrides run.out)");
        sub->add_option("--seed", o.seed, "Master seed");
    };
    auto sensing = [&](CLI::App* sub) {
        sub->add_option("--channel", o.channel, "Sensor channel (ext or reg)");
        sub->add_option("--ensemble", o.ensemble, "Ensemble size");
        sub->add_option("--sensors", o.sensors, "Sensors per member");
        sub->add_option("--lags", o.lags, "Lag L");
        sub->add_option("--sigma", o.sigma, "Noise standard deviation on scaled data");
        sub->add_option("--noise", o.noise, "additive or multiplicative");
    };

    auto* gen = app.add_subcommand("gen-data", "Run the solver and write the snapshot datasets");
    common(gen);
    gen->add_option("--perturb", o.perturb, "Also write a perturbed dataset, NAME=VALUE");
    auto* tr = app.add_subcommand("train", "Train an ensemble on one channel");
    common(tr);
    sensing(tr);
    auto* ev = app.add_subcommand("evaluate", "Report test-set reconstruction errors");
    common(ev);
    sensing(ev);
    ev->add_option("--oracle", o.oracle, "svd: replace the network by the projected truth");
    auto* up = app.add_subcommand("update-experiment", "Feed perturbed measurements to the trained ensembles");
    common(up);
    sensing(up);
    auto* in = app.add_subcommand("inspect", "Print the header of a dataset, bases or checkpoint file");
    in->add_option("file", o.target, "Container to inspect")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (in->parsed()) return cmd_inspect(o.target);
        const auto config = resolve(o);
        if (gen->parsed()) return cmd_gen_data(config);
        if (tr->parsed()) return cmd_train(config);
        if (ev->parsed()) return cmd_evaluate(config, o.oracle == "svd");
        if (up->parsed()) return cmd_update(config);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UnknownPerturbation& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
