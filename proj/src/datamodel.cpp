#include "shred/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "shred/binary_io.hpp"
#include "shred/error.hpp"
#include "shred/random.hpp"

namespace shred {

namespace {
constexpr char kStateMagic[5] = "SHRD";
constexpr std::uint16_t kStateVersion = 1;
} // namespace

std::size_t field_rank(std::string_view name) {
    for (std::size_t i = 0; i < kFieldOrder.size(); ++i) {
        if (kFieldOrder[i] == name) return i;
    }
    throw OrderError("unknown field '" + std::string(name) + "'");
}

FieldSnapshotSet::FieldSnapshotSet(std::string name, Eigen::MatrixXd data, Grid grid, std::vector<double> times)
    : name_(std::move(name)), data_(std::move(data)), grid_(grid), times_(std::move(times)) {
    field_rank(name_);
    if (static_cast<std::size_t>(data_.rows()) != grid_.size()) {
        throw DimensionError(name_ + ": " + std::to_string(data_.rows()) + " rows but grid has " +
                             std::to_string(grid_.size()) + " cells");
    }
    if (static_cast<std::size_t>(data_.cols()) != times_.size()) {
        throw DimensionError(name_ + ": " + std::to_string(data_.cols()) + " columns but " +
                             std::to_string(times_.size()) + " timestamps");
    }
    if (!data_.allFinite()) throw DimensionError(name_ + ": non-finite entries");
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] > times_[k - 1])) throw DimensionError(name_ + ": times not strictly increasing");
    }
}

bool FieldSnapshotSet::operator==(const FieldSnapshotSet& o) const {
    return name_ == o.name_ && grid_ == o.grid_ && times_ == o.times_ && data_.rows() == o.data_.rows() &&
           data_.cols() == o.data_.cols() &&
           std::memcmp(data_.data(), o.data_.data(), static_cast<std::size_t>(data_.size()) * sizeof(double)) == 0;
}

FullState::FullState(std::vector<FieldSnapshotSet> fields) : fields_(std::move(fields)) {
    for (std::size_t f = 1; f < fields_.size(); ++f) {
        if (field_rank(fields_[f].name()) <= field_rank(fields_[f - 1].name())) {
            throw OrderError("field '" + fields_[f].name() + "' out of canonical order");
        }
        if (fields_[f].times() != fields_[0].times()) {
            throw DimensionError("field '" + fields_[f].name() + "' has a different time axis");
        }
    }
}

const FieldSnapshotSet& FullState::field(std::string_view name) const {
    for (const auto& f : fields_) {
        if (f.name() == name) return f;
    }
    throw OrderError("state has no field '" + std::string(name) + "'");
}

const std::vector<double>& FullState::times() const {
    if (fields_.empty()) throw DimensionError("empty state has no time axis");
    return fields_.front().times();
}

std::size_t FullState::n_times() const { return fields_.empty() ? 0 : fields_.front().n_times(); }

MinMaxScaler::MinMaxScaler(std::vector<Range> ranges) : ranges_(std::move(ranges)) {
    for (const auto& r : ranges_) {
        if (!(r.max > r.min)) throw ConstantFieldError(r.field + ": max must exceed min");
    }
}

const MinMaxScaler::Range& MinMaxScaler::range(std::string_view field) const {
    for (const auto& r : ranges_) {
        if (r.field == field) return r;
    }
    throw OrderError("scaler has no field '" + std::string(field) + "'");
}

Eigen::MatrixXd MinMaxScaler::apply(std::string_view field, const Eigen::MatrixXd& x) const {
    const auto& r = range(field);
    return (x.array() - r.min) / (r.max - r.min);
}

Eigen::MatrixXd MinMaxScaler::invert(std::string_view field, const Eigen::MatrixXd& x) const {
    const auto& r = range(field);
    return x.array() * (r.max - r.min) + r.min;
}

FullState MinMaxScaler::apply(const FullState& state) const {
    std::vector<FieldSnapshotSet> out;
    for (const auto& f : state.fields()) {
        out.emplace_back(f.name(), apply(f.name(), f.data()), f.grid(), f.times());
    }
    return FullState(std::move(out));
}

FullState MinMaxScaler::invert(const FullState& state) const {
    std::vector<FieldSnapshotSet> out;
    for (const auto& f : state.fields()) {
        out.emplace_back(f.name(), invert(f.name(), f.data()), f.grid(), f.times());
    }
    return FullState(std::move(out));
}

MinMaxScaler fit_scaler(const FullState& state) {
    std::vector<MinMaxScaler::Range> ranges;
    for (const auto& f : state.fields()) {
        const double lo = f.data().minCoeff();
        const double hi = f.data().maxCoeff();
        if (!(hi > lo)) throw ConstantFieldError(f.name() + " is constant (" + std::to_string(lo) + ")");
        ranges.push_back({f.name(), lo, hi});
    }
    return MinMaxScaler(std::move(ranges));
}

SplitIndices split(std::size_t n_t, SplitRatios ratios, std::uint64_t seed) {
    if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
        throw RatioError("ratios sum to " + std::to_string(ratios.train + ratios.valid + ratios.test));
    }
    if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0) throw RatioError("negative ratio");
    if (n_t < 10) throw DimensionError("split needs at least 10 snapshots");

    const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * static_cast<double>(n_t)));
    const auto n_valid = std::min(n_t - n_train,
                                  static_cast<std::size_t>(std::llround(ratios.valid * static_cast<double>(n_t))));

    std::vector<std::size_t> perm(n_t);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    // Explicit Fisher-Yates: std::shuffle's draw pattern is implementation-defined.
    for (std::size_t i = n_t - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(perm[i], perm[j]);
    }

    SplitIndices s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.valid.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                   perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.valid.begin(), s.valid.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

void save_state(const FullState& state, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    io::write_magic(os, kStateMagic);
    io::write_u16(os, kStateVersion);
    io::write_u64(os, state.size());
    for (const auto& f : state.fields()) {
        io::write_string(os, f.name());
        io::write_u64(os, f.grid().nx);
        io::write_u64(os, f.grid().ny);
        io::write_u64(os, f.n_times());
        io::write_f64(os, f.grid().dx);
        io::write_f64(os, f.grid().dy);
        io::write_f64_array(os, f.times().data(), f.times().size());
        io::write_matrix_rowmajor(os, f.data());
    }
    if (!os) throw FormatError("write failed for " + path.string());
}

FullState load_state(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    io::expect_magic(is, kStateMagic);
    const auto version = io::read_u16(is);
    if (version != kStateVersion) throw FormatError("unsupported version " + std::to_string(version));
    const auto n_fields = io::read_u64(is);
    if (n_fields > kFieldOrder.size()) throw FormatError("field count " + std::to_string(n_fields));

    std::vector<FieldSnapshotSet> fields;
    for (std::uint64_t f = 0; f < n_fields; ++f) {
        auto name = io::read_string(is, 64);
        Grid grid;
        grid.nx = io::read_u64(is);
        grid.ny = io::read_u64(is);
        const auto n_t = io::read_u64(is);
        grid.dx = io::read_f64(is);
        grid.dy = io::read_f64(is);
        if (n_t > (1u << 26)) throw FormatError("implausible time count");
        std::vector<double> times(n_t);
        io::read_exact(is, times.data(), n_t * sizeof(double));
        auto data = io::read_matrix_rowmajor(is, grid.nx * grid.ny, n_t);
        fields.emplace_back(std::move(name), std::move(data), grid, std::move(times));
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw DimensionError("trailing bytes after declared payload");
    }
    return FullState(std::move(fields));
}

void export_slice_csv(const FieldSnapshotSet& field, std::size_t time_index, const std::filesystem::path& path) {
    if (time_index >= field.n_times()) throw DimensionError("time index out of range");
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open " + path.string());
    os.precision(17);
    os << "i,j,x,y," << field.name() << "\n";
    const auto& g = field.grid();
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            os << i << ',' << j << ',' << (static_cast<double>(i) + 0.5) * g.dx << ','
               << (static_cast<double>(j) + 0.5) * g.dy << ','
               << field.data()(static_cast<Eigen::Index>(g.index(i, j)), static_cast<Eigen::Index>(time_index))
               << '\n';
        }
    }
}

} // namespace shred
