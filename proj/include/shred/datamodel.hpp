#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace shred {

/// Canonical field order of the state vector.
inline constexpr std::array<std::string_view, 6> kFieldOrder{"T", "ux", "uy", "p", "kappa", "omega"};

/// Position of `name` in kFieldOrder; throws OrderError for unknown names.
std::size_t field_rank(std::string_view name);

/// Uniform rectangular grid. Cell (i, j) has flattened index j * nx + i,
/// with j = 0 the bottom row.
struct Grid {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double dx = 0.0;
    double dy = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return nx * ny; }
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
    bool operator==(const Grid&) const = default;
};

/// One field's snapshot matrix: rows are spatial dofs, columns time instants.
class FieldSnapshotSet {
public:
    FieldSnapshotSet(std::string name, Eigen::MatrixXd data, Grid grid, std::vector<double> times);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] const Eigen::MatrixXd& data() const noexcept { return data_; }
    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] std::size_t n_dofs() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    [[nodiscard]] std::size_t n_times() const noexcept { return static_cast<std::size_t>(data_.cols()); }

    bool operator==(const FieldSnapshotSet& o) const;

private:
    std::string name_;
    Eigen::MatrixXd data_;
    Grid grid_;
    std::vector<double> times_;
};

/// Ordered collection of fields sharing one time axis. Fields must appear in
/// canonical order; a subset of kFieldOrder is allowed.
class FullState {
public:
    FullState() = default;
    explicit FullState(std::vector<FieldSnapshotSet> fields);

    [[nodiscard]] const std::vector<FieldSnapshotSet>& fields() const noexcept { return fields_; }
    [[nodiscard]] const FieldSnapshotSet& field(std::string_view name) const;
    [[nodiscard]] const std::vector<double>& times() const;
    [[nodiscard]] std::size_t n_times() const;
    [[nodiscard]] std::size_t size() const noexcept { return fields_.size(); }

    bool operator==(const FullState& o) const { return fields_ == o.fields_; }

private:
    std::vector<FieldSnapshotSet> fields_;
};

/// Per-field affine map [min, max] -> [0, 1].
class MinMaxScaler {
public:
    struct Range {
        std::string field;
        double min = 0.0;
        double max = 1.0;
    };

    MinMaxScaler() = default;
    explicit MinMaxScaler(std::vector<Range> ranges);

    [[nodiscard]] const std::vector<Range>& ranges() const noexcept { return ranges_; }
    [[nodiscard]] const Range& range(std::string_view field) const;

    [[nodiscard]] Eigen::MatrixXd apply(std::string_view field, const Eigen::MatrixXd& x) const;
    [[nodiscard]] Eigen::MatrixXd invert(std::string_view field, const Eigen::MatrixXd& x) const;
    [[nodiscard]] FullState apply(const FullState& state) const;
    [[nodiscard]] FullState invert(const FullState& state) const;

private:
    std::vector<Range> ranges_;
};

/// Extrema over every snapshot of every field; throws ConstantFieldError.
MinMaxScaler fit_scaler(const FullState& state);

struct SplitRatios {
    double train = 0.70;
    double valid = 0.15;
    double test = 0.15;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

/// Seeded random partition of [0, n_t). train = round(r_train * n_t),
/// valid = round(r_valid * n_t), test = remainder. Each set is sorted.
SplitIndices split(std::size_t n_t, SplitRatios ratios, std::uint64_t seed);

void save_state(const FullState& state, const std::filesystem::path& path);
FullState load_state(const std::filesystem::path& path);

/// Writes one time column of a field as "i,j,x,y,value" rows.
void export_slice_csv(const FieldSnapshotSet& field, std::size_t time_index, const std::filesystem::path& path);

} // namespace shred
