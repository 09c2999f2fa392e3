#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace shred {

/// Leading left singular vectors of one field's snapshot matrix.
struct SvdBasis {
    std::string field;
    Eigen::MatrixXd modes;            // n_dofs x rank, orthonormal columns
    Eigen::VectorXd singular_values;  // all min(n_dofs, n_t) values, non-increasing

    [[nodiscard]] std::size_t rank() const noexcept { return static_cast<std::size_t>(modes.cols()); }
    [[nodiscard]] std::size_t n_dofs() const noexcept { return static_cast<std::size_t>(modes.rows()); }
    /// sum_{i<=r} s_i^2 / sum s_i^2 (1 for an all-zero spectrum).
    [[nodiscard]] double retained_energy() const;
    [[nodiscard]] double discarded_energy() const;
};

/// Reduced coefficients V = U^T X of one field.
struct ReducedTrajectory {
    std::string field;
    Eigen::MatrixXd coeffs;  // rank x n_t

    [[nodiscard]] std::size_t rank() const noexcept { return static_cast<std::size_t>(coeffs.rows()); }
};

struct SvdOptions {
    double tolerance = 1e-12;
    int max_sweeps = 60;
};

/// Thin SVD of x keeping the leading `r_max` left vectors.
///
/// Householder QR reduces x to its n x n triangular factor (n = the smaller
/// dimension); a cyclic one-sided Jacobi iteration then orthogonalizes that
/// factor's columns until every pair satisfies |a_p.a_q| <= tol |a_p||a_q|.
/// Singular values come out as column norms, so small values keep full
/// relative accuracy. Modes belonging to zero singular values are completed
/// to an orthonormal set. Throws ConvergenceError, DimensionError.
[[nodiscard]] SvdBasis truncated_svd(const Eigen::MatrixXd& x, std::size_t r_max, const SvdOptions& options = {},
                                     std::string field = {});

/// Smallest r with sum_{i<=r} s_i^2 / sum s_i^2 >= threshold. Throws
/// EmptySpectrumError when every value is zero.
[[nodiscard]] std::size_t select_rank(const Eigen::VectorXd& singular_values, double energy_threshold);

/// Copy of `basis` keeping only its first `rank` modes.
[[nodiscard]] SvdBasis truncate(const SvdBasis& basis, std::size_t rank);

[[nodiscard]] ReducedTrajectory project(const SvdBasis& basis, const Eigen::MatrixXd& x);
[[nodiscard]] Eigen::MatrixXd lift(const SvdBasis& basis, const Eigen::MatrixXd& coeffs);

/// Vertically stacked reduced state of several fields, in canonical order.
struct StackedReduced {
    Eigen::MatrixXd coeffs;            // r_total x n_t
    std::vector<std::string> fields;
    std::vector<std::size_t> offsets;  // first row of each field
    std::vector<std::size_t> ranks;

    [[nodiscard]] std::size_t total_rank() const noexcept { return static_cast<std::size_t>(coeffs.rows()); }
};

/// Throws OrderError when fields are not in canonical order, DimensionError
/// on mismatched time counts.
[[nodiscard]] StackedReduced stack_reduced(const std::vector<ReducedTrajectory>& per_field);
[[nodiscard]] std::vector<ReducedTrajectory> unstack(const StackedReduced& stacked);
/// Splits any r_total x n matrix with the layout of `layout`.
[[nodiscard]] std::vector<ReducedTrajectory> unstack(const StackedReduced& layout, const Eigen::MatrixXd& coeffs);

void save_bases(const std::vector<SvdBasis>& bases, const std::filesystem::path& path);
[[nodiscard]] std::vector<SvdBasis> load_bases(const std::filesystem::path& path);

/// Long-format CSV: field,index,singular_value,discarded_energy.
void export_spectra_csv(const std::vector<SvdBasis>& bases, const std::filesystem::path& path);

} // namespace shred
