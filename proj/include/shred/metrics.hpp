#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shred/datamodel.hpp"

namespace shred {

/// Average of per-column relative l2 errors ||t_j - e_j|| / ||t_j||.
struct RelativeError {
    double average = 0.0;
    std::vector<std::size_t> columns;  // columns that contributed, in order
    std::vector<double> series;        // one entry per contributing column
    std::vector<std::size_t> skipped;  // zero-norm truth columns
};

/// Over `columns` (every column when empty). Zero-norm truth columns are
/// skipped and listed. Throws ShapeError.
[[nodiscard]] RelativeError avg_relative_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate,
                                               const std::vector<std::size_t>& columns = {});

struct FieldError {
    std::string field;
    std::string channel;
    RelativeError error;
};

/// field,channel,eps2,n_columns,n_skipped
void write_error_table_csv(const std::vector<FieldError>& rows, const std::filesystem::path& path);
/// field,channel,column,relative_error
void write_error_series_csv(const std::vector<FieldError>& rows, const std::filesystem::path& path);

enum class Verdict { Closer, Tie, Farther };
[[nodiscard]] std::string to_string(Verdict v);

/// Trajectories at one monitored location of the model-update study.
struct LocationTrace {
    std::size_t location = 0;
    Eigen::VectorXd baseline;  // reference model (dataset A)
    Eigen::VectorXd truth;     // perturbed dataset B
    Eigen::VectorXd shred;     // A-trained ensemble fed with B measurements
    double baseline_distance = 0.0;  // ||baseline - truth|| over time
    double shred_distance = 0.0;     // ||shred - truth|| over time
    Verdict verdict = Verdict::Tie;
};

/// Closer when shred_distance < baseline_distance - band, Farther when
/// shred_distance > baseline_distance + band, Tie otherwise. Inputs are
/// n_dofs x n_t physical fields. Throws ShapeError, IndexError.
[[nodiscard]] std::vector<LocationTrace> update_report(const Eigen::MatrixXd& baseline, const Eigen::MatrixXd& truth,
                                                       const Eigen::MatrixXd& shred,
                                                       const std::vector<std::size_t>& locations, double band = 0.0);

/// Fraction of traces with verdict Closer (0 for an empty report).
[[nodiscard]] double closer_fraction(const std::vector<LocationTrace>& traces);

/// One CSV per location (time,baseline,truth,shred) named
/// `<prefix>_loc<index>.csv`, plus `<prefix>_summary.csv`.
void write_update_report(const std::vector<LocationTrace>& traces, const std::vector<double>& times,
                         const std::filesystem::path& dir, const std::string& prefix);

/// i,j,x,y,truth,mean,residual,std for one snapshot column.
void write_grid_dump(const Grid& grid, const Eigen::VectorXd& truth, const Eigen::VectorXd& mean,
                     const Eigen::VectorXd& std, const std::filesystem::path& path);

/// Fraction of entries with |truth - mean| <= k * std.
[[nodiscard]] double band_coverage(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& mean,
                                   const Eigen::MatrixXd& std, double k);

} // namespace shred
