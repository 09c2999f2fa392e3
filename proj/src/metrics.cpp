#include "shred/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "shred/error.hpp"

namespace shred {

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << std::setprecision(17);
    return os;
}

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

} // namespace

RelativeError avg_relative_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate,
                                 const std::vector<std::size_t>& columns) {
    require_same_shape(truth, estimate, "relative error operands differ");
    std::vector<std::size_t> cols = columns;
    if (cols.empty()) {
        cols.resize(static_cast<std::size_t>(truth.cols()));
        std::iota(cols.begin(), cols.end(), std::size_t{0});
    }
    RelativeError r;
    double sum = 0.0;
    for (auto c : cols) {
        if (c >= static_cast<std::size_t>(truth.cols())) throw IndexError("column " + std::to_string(c) + " out of range");
        const auto j = static_cast<Eigen::Index>(c);
        const double denom = truth.col(j).norm();
        if (denom == 0.0) {
            r.skipped.push_back(c);
            continue;
        }
        const double e = (truth.col(j) - estimate.col(j)).norm() / denom;
        r.columns.push_back(c);
        r.series.push_back(e);
        sum += e;
    }
    r.average = r.series.empty() ? 0.0 : sum / static_cast<double>(r.series.size());
    return r;
}

void write_error_table_csv(const std::vector<FieldError>& rows, const std::filesystem::path& path) {
    auto os = open_csv(path);
    os << "field,channel,eps2,n_columns,n_skipped\n";
    for (const auto& r : rows) {
        os << r.field << ',' << r.channel << ',' << r.error.average << ',' << r.error.series.size() << ','
           << r.error.skipped.size() << '\n';
    }
}

void write_error_series_csv(const std::vector<FieldError>& rows, const std::filesystem::path& path) {
    auto os = open_csv(path);
    os << "field,channel,column,relative_error\n";
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.error.series.size(); ++k) {
            os << r.field << ',' << r.channel << ',' << r.error.columns[k] << ',' << r.error.series[k] << '\n';
        }
    }
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Closer: return "closer";
    case Verdict::Tie: return "tie";
    case Verdict::Farther: return "farther";
    }
    return "?";
}

std::vector<LocationTrace> update_report(const Eigen::MatrixXd& baseline, const Eigen::MatrixXd& truth,
                                         const Eigen::MatrixXd& shred, const std::vector<std::size_t>& locations,
                                         double band) {
    require_same_shape(baseline, truth, "baseline and truth differ");
    require_same_shape(shred, truth, "estimate and truth differ");
    std::vector<LocationTrace> out;
    for (auto loc : locations) {
        if (loc >= static_cast<std::size_t>(truth.rows())) {
            throw IndexError("location " + std::to_string(loc) + " outside field with " +
                             std::to_string(truth.rows()) + " dofs");
        }
        const auto i = static_cast<Eigen::Index>(loc);
        LocationTrace t;
        t.location = loc;
        t.baseline = baseline.row(i).transpose();
        t.truth = truth.row(i).transpose();
        t.shred = shred.row(i).transpose();
        t.baseline_distance = (t.baseline - t.truth).norm();
        t.shred_distance = (t.shred - t.truth).norm();
        if (t.shred_distance < t.baseline_distance - band) {
            t.verdict = Verdict::Closer;
        } else if (t.shred_distance > t.baseline_distance + band) {
            t.verdict = Verdict::Farther;
        } else {
            t.verdict = Verdict::Tie;
        }
        out.push_back(std::move(t));
    }
    return out;
}

double closer_fraction(const std::vector<LocationTrace>& traces) {
    if (traces.empty()) return 0.0;
    const auto n = std::count_if(traces.begin(), traces.end(), [](const auto& t) { return t.verdict == Verdict::Closer; });
    return static_cast<double>(n) / static_cast<double>(traces.size());
}

void write_update_report(const std::vector<LocationTrace>& traces, const std::vector<double>& times,
                         const std::filesystem::path& dir, const std::string& prefix) {
    auto summary = open_csv(dir / (prefix + "_summary.csv"));
    summary << "location,baseline_l2,shred_l2,verdict\n";
    for (const auto& t : traces) {
        summary << t.location << ',' << t.baseline_distance << ',' << t.shred_distance << ',' << to_string(t.verdict)
                << '\n';
        if (static_cast<std::size_t>(t.truth.size()) != times.size()) {
            throw ShapeError("trace length differs from the time vector");
        }
        auto os = open_csv(dir / (prefix + "_loc" + std::to_string(t.location) + ".csv"));
        os << "time,baseline,truth,shred\n";
        for (Eigen::Index k = 0; k < t.truth.size(); ++k) {
            os << times[static_cast<std::size_t>(k)] << ',' << t.baseline[k] << ',' << t.truth[k] << ',' << t.shred[k]
               << '\n';
        }
    }
}

void write_grid_dump(const Grid& grid, const Eigen::VectorXd& truth, const Eigen::VectorXd& mean,
                     const Eigen::VectorXd& std, const std::filesystem::path& path) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (truth.size() != n || mean.size() != n || std.size() != n) throw ShapeError("grid dump vectors differ from grid");
    auto os = open_csv(path);
    os << "i,j,x,y,truth,mean,residual,std\n";
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const auto k = static_cast<Eigen::Index>(grid.index(i, j));
            os << i << ',' << j << ',' << (static_cast<double>(i) + 0.5) * grid.dx << ','
               << (static_cast<double>(j) + 0.5) * grid.dy << ',' << truth[k] << ',' << mean[k] << ','
               << truth[k] - mean[k] << ',' << std[k] << '\n';
        }
    }
}

double band_coverage(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& mean, const Eigen::MatrixXd& std, double k) {
    require_same_shape(truth, mean, "coverage operands differ");
    require_same_shape(truth, std, "coverage operands differ");
    if (truth.size() == 0) return 0.0;
    const auto inside = ((truth - mean).array().abs() <= k * std.array()).count();
    return static_cast<double>(inside) / static_cast<double>(truth.size());
}

} // namespace shred
