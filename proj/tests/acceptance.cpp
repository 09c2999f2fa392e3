// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
// The reconstruction criteria train the full-size ensembles from
// configs/reconstruction.cfg, so a complete run takes tens of minutes.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "network_oracle.hpp"
#include "shred/compression.hpp"
#include "shred/config.hpp"
#include "shred/pipeline.hpp"
#include "shred/synthgen.hpp"
#include "test_util.hpp"

using namespace shred;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string what, detail;
};
std::map<int, Outcome> outcomes;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    outcomes[id] = {pass, what, detail};
    std::cout << "  criterion " << id << (pass ? " passed" : " failed") << std::endl;
}

class Timer {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 3) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

const std::vector<std::string>& field_names() {
    static const std::vector<std::string> names(kFieldOrder.begin(), kFieldOrder.end());
    return names;
}

std::string pct(double v) { return fmt(100.0 * v) + "%"; }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SHRED_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t linear_scan_rank(const Eigen::VectorXd& s, double threshold) {
    const double total = s.squaredNorm();
    double acc = 0.0;
    for (Eigen::Index r = 0; r < s.size(); ++r) {
        acc += s[r] * s[r];
        if (acc / total >= threshold) return static_cast<std::size_t>(r + 1);
    }
    return static_cast<std::size_t>(s.size());
}

// ---------------------------------------------------------------------------

void gradient_check() {
    using testutil::FdLoss;
    Timer t;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        worst = std::max(worst, testutil::max_gradient_rel_error(testutil::tiny_gradient_problem(seed, 0.1), FdLoss::Extended));
    }
    const double secs = t.seconds();
    double worst_double = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        worst_double = std::max(
            worst_double, testutil::max_gradient_rel_error(testutil::tiny_gradient_problem(seed, 0.1), FdLoss::Library));
    }
    report(1, worst < 1e-5 && secs < 5.0, "gradient check on the tiny network, central differences h=1e-6",
           "max rel " + fmt(worst) + " < 1e-5 (long double loss), " + fmt(secs) + " s < 5 s; double loss gives " +
               fmt(worst_double));
}

void svd_check() {
    Timer t;
    const Eigen::MatrixXd x = testutil::gaussian_matrix(50, 40, 2024);
    const auto full = truncated_svd(x, 40);
    const double ortho =
        (full.modes.transpose() * full.modes - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff();
    double trunc_rel = 0.0;
    for (std::size_t r : {1u, 5u, 10u, 20u, 39u}) {
        const auto b = truncate(full, r);
        const double err = (x - lift(b, project(b, x).coeffs)).squaredNorm() / x.squaredNorm();
        trunc_rel = std::max(trunc_rel, std::abs(err - b.discarded_energy()) / b.discarded_energy());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.transpose() * x);
    const Eigen::VectorXd oracle = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
    const double sv_rel = ((full.singular_values - oracle).array().abs() / oracle.array()).maxCoeff();
    const double secs = t.seconds();
    report(2, ortho <= 1e-10 && trunc_rel <= 1e-6 && sv_rel <= 1e-8 && secs < 5.0, "SVD on a 50x40 matrix",
           "|U'U-I| " + fmt(ortho) + " <= 1e-10, truncation rel " + fmt(trunc_rel) + " <= 1e-6, sv rel " +
               fmt(sv_rel) + " <= 1e-8, " + fmt(secs) + " s < 5 s");
}

void rank_check() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int agree = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5 + static_cast<int>(rng() % 200);
        Eigen::VectorXd s(n);
        const double decay = 0.05 + 2.0 * u(rng);
        for (int i = 0; i < n; ++i) s[i] = std::exp(-decay * i) * (0.5 + u(rng));
        std::sort(s.data(), s.data() + n, std::greater<>());
        if (select_rank(s, 0.999) == linear_scan_rank(s, 0.999)) ++agree;
    }
    report(3, agree == 100, "rank selection at 0.999 energy", std::to_string(agree) + "/100 spectra match the scan");
}

// ---------------------------------------------------------------------------

struct ChannelRun {
    std::vector<TrainedMember> members;
    Evaluation eval;
    std::map<std::string, double> eps;
};

ChannelRun run_channel(const Prepared& prep, const EnsembleConfig& cfg, const std::string& label) {
    ChannelRun r;
    r.members = train_ensemble(prep.sensed(), prep.reduced, prep.split, prep.channel(label), cfg);
    r.eval = evaluate(prep, r.members, label);
    for (const auto& e : r.eval.errors) r.eps[e.field] = e.error.average;
    return r;
}

std::string eps_line(const ChannelRun& r) {
    std::string s;
    for (const auto& f : field_names()) s += (s.empty() ? "" : " ") + f + " " + pct(r.eps.at(f));
    return s;
}

/// Returns the largest projection divergence seen in the two full transients.
double reconstruction_criteria() {
    const auto cfg = load_config(fs::path(SHRED_CONFIG_DIR) / "reconstruction.cfg", false);
    std::cout << "reconstruction study: " << cfg.ensemble.members << " members per channel, s=" << cfg.ensemble.sensors
              << ", L=" << cfg.ensemble.lag << ", sigma=" << cfg.ensemble.sigma << ", " << cfg.ensemble.train.epochs
              << " epochs" << std::endl;

    Timer total;
    const auto sim_a = synthgen::simulate(cfg.solver);
    const auto prep = prepare(sim_a.state, cfg);
    std::cout << "  dataset A and reduction ready after " << fmt(total.seconds()) << " s" << std::endl;
    std::map<std::string, ChannelRun> noisy;
    for (const std::string label : {"ext", "reg"}) {
        noisy[label] = run_channel(prep, cfg.ensemble, label);
        std::cout << "  " << label << " sigma=" << cfg.ensemble.sigma << ": " << eps_line(noisy[label]) << " after "
                  << fmt(total.seconds()) << " s" << std::endl;
    }
    const double secs = total.seconds();

    // 4: accuracy and runtime
    bool ok4 = secs <= 900.0;
    std::string detail;
    for (const auto& [label, run] : noisy) {
        for (const auto& [field, e] : run.eps) ok4 = ok4 && e <= (field == "T" ? 0.03 : 0.05);
        detail += label + ": " + eps_line(run) + "; ";
    }
    report(4, ok4, "ensemble-mean test error, T <= 3%, others <= 5%, runtime <= 15 min",
           detail + fmt(secs) + " s");

    // 5: obstacle-shadowed vs lateral channel
    bool ok5 = true;
    std::string ratios;
    for (const auto& f : field_names()) {
        const double q = noisy["reg"].eps.at(f) / noisy["ext"].eps.at(f);
        ok5 = ok5 && q <= 2.5;
        ratios += (ratios.empty() ? "" : " ") + f + " " + fmt(q);
    }
    report(5, ok5, "reg/ext error ratio <= 2.5 per field", ratios);

    // 7: uncertainty band coverage
    bool ok7 = true;
    std::string cov;
    for (const auto& [label, run] : noisy) {
        const double c = reduced_coverage(run.eval, prep.reduced, 5, 2.0);
        ok7 = ok7 && c >= 0.8;
        cov += (cov.empty() ? "" : ", ") + label + " " + pct(c);
    }
    report(7, ok7, "truth inside mean +- 2 std for >= 80% of (mode, time) pairs, first 5 modes", cov);

    // 8: model update with a perturbed heater power
    auto variant = cfg.solver;
    for (const auto& p : cfg.perturbations) variant = synthgen::perturbed_variant(variant, p);
    const auto sim_b = synthgen::simulate(variant);
    const auto ext_to_reg = update_study(prep, sim_b.state, noisy["ext"].members, "ext", prep.channel("reg"));
    const auto reg_to_ext = update_study(prep, sim_b.state, noisy["reg"].members, "reg", prep.channel("ext"));
    report(8, ext_to_reg.closer() >= 0.6 && reg_to_ext.closer() >= 0.6,
           "SHRED T closer to dataset B than the A baseline at >= 60% of monitored locations",
           "train ext/monitor reg " + pct(ext_to_reg.closer()) + ", train reg/monitor ext " + pct(reg_to_ext.closer()));

    // 6: noise robustness with identical seeds
    auto clean_cfg = cfg.ensemble;
    clean_cfg.sigma = 0.0;
    bool ok6 = true;
    std::string deg;
    for (const std::string label : {"ext", "reg"}) {
        const auto clean = run_channel(prep, clean_cfg, label);
        std::cout << "  " << label << " sigma=0: " << eps_line(clean) << std::endl;
        deg += (deg.empty() ? "" : "; ") + label + ":";
        for (const auto& f : field_names()) {
            const double d = 100.0 * (noisy[label].eps.at(f) - clean.eps.at(f));
            ok6 = ok6 && d <= 2.0;
            deg += " " + f + " " + fmt(d) + "pp";
        }
    }
    report(6, ok6, "degradation from sigma=0 to sigma=0.025 <= 2 percentage points", deg);

    return std::max(sim_a.diagnostics.max_divergence, sim_b.diagnostics.max_divergence);
}

// ---------------------------------------------------------------------------

void solver_physics(double full_run_divergence) {
    auto rest = synthgen::default_config();
    rest.steps = 3000;
    rest.flux.a = 0.0;
    rest.flux.d = 0.0;
    const auto r = synthgen::simulate(rest);
    double dev = 0.0;
    for (const auto& f : r.state.fields()) {
        const double expect = f.name() == "T" ? rest.t_init : 0.0;
        dev = std::max(dev, (f.data().array() - expect).abs().maxCoeff());
    }

    synthgen::SolverConfig box;
    box.nx = box.ny = 32;
    box.dt = 0.02;
    box.gravity = 0.0;
    box.top_dirichlet = false;
    box.steps = 3000;
    box.stride = 100;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(280.0, 320.0);
    for (std::size_t k = 0; k < box.nx * box.ny; ++k) box.t_initial_field.push_back(u(rng));
    const auto b = synthgen::simulate(box);
    const Grid g = box.grid();
    double prev = 0.0;
    for (double v : box.t_initial_field) prev += v * g.dx * g.dy;
    double drift = 0.0;
    for (Eigen::Index k = 0; k < b.state.field("T").data().cols(); ++k) {
        const double e = b.state.field("T").data().col(k).sum() * g.dx * g.dy;
        drift = std::max(drift, std::abs(e - prev) / std::abs(prev));
        prev = e;
    }

    const double tol = synthgen::default_config().poisson_tol;
    const double div = std::max(full_run_divergence, b.diagnostics.max_divergence);
    report(9, dev == 0.0 && drift < 1e-6 && div <= 10.0 * tol,
           "solver physics: null forcing exact, adiabatic energy drift < 1e-6 per 100 steps, |div u| <= 10x tol",
           "rest deviation " + fmt(dev) + ", drift " + fmt(drift) + ", max div " + fmt(div) + " (full transients) <= " +
               fmt(10.0 * tol));
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> csv_files(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") {
            const auto bytes = testutil::slurp(e.path());
            out[fs::relative(e.path(), root).string()] = std::string(bytes.begin(), bytes.end());
        }
    }
    return out;
}

void determinism(const fs::path& scratch) {
    const std::string cfg = std::string(SHRED_TEST_DATA) + "/mini.cfg";
    bool ran = true;
    for (const char* run : {"a", "b"}) {
        const std::string out = " --config " + cfg + " --out " + (scratch / run).string();
        for (const std::string cmd : {"gen-data", "train", "train --channel reg", "evaluate", "evaluate --channel reg",
                                      "evaluate --oracle svd", "update-experiment"}) {
            const auto space = cmd.find(' ');
            const std::string args =
                space == std::string::npos ? cmd + out : cmd.substr(0, space) + out + cmd.substr(space);
            ran = ran && run_cli(args) == 0;
        }
    }
    const auto a = csv_files(scratch / "a");
    const auto b = csv_files(scratch / "b");
    std::size_t same = 0;
    for (const auto& [name, text] : a) {
        const auto it = b.find(name);
        if (it != b.end() && it->second == text) ++same;
    }
    const bool csv_ok = ran && !a.empty() && a.size() == b.size() && same == a.size();

    bool ckpt_ok = true;
    for (const char* ch : {"ext", "reg"}) {
        for (const char* m : {"member_0.shrm", "member_1.shrm"}) {
            const auto pa = scratch / "a" / ch / m;
            const auto pb = scratch / "b" / ch / m;
            if (!fs::exists(pa) || !fs::exists(pb)) {
                ckpt_ok = false;
                continue;
            }
            TrainConfig echo;
            const auto model = ShredModel::load(pa, &echo);
            model.save(scratch / "resaved.shrm", echo);
            ckpt_ok = ckpt_ok && testutil::slurp(pa) == testutil::slurp(scratch / "resaved.shrm") &&
                      testutil::slurp(pa) == testutil::slurp(pb) && ShredModel::load(scratch / "resaved.shrm") == model;
        }
    }
    report(10, csv_ok && ckpt_ok, "repeated runs give byte-identical CSVs, checkpoints reload bit-exact",
           std::to_string(same) + "/" + std::to_string(a.size()) + " CSVs identical, checkpoints " +
               (ckpt_ok ? "bit-exact" : "differ"));
}

} // namespace

int main() {
    std::cout << std::unitbuf;
    testutil::TempDir scratch("acceptance");
    try {
        gradient_check();
        svd_check();
        rank_check();
        determinism(scratch / "det");
        solver_physics(reconstruction_criteria());
    } catch (const std::exception& e) {
        std::cout << "aborted: " << e.what() << std::endl;
    }
    int failures = 0;
    std::cout << "\n";
    for (int id = 1; id <= 10; ++id) {
        const auto it = outcomes.find(id);
        if (it == outcomes.end()) {
            ++failures;
            std::cout << "FAIL  criterion " << std::setw(2) << id << "  not evaluated\n";
            continue;
        }
        const auto& o = it->second;
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << id << "  " << o.what << "  ["
                  << o.detail << "]\n";
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
