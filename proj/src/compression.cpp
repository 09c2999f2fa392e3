#include "shred/compression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "shred/binary_io.hpp"
#include "shred/datamodel.hpp"
#include "shred/error.hpp"

namespace shred {

namespace {
constexpr char kBasisMagic[5] = "SHRB";
constexpr std::uint16_t kBasisVersion = 1;

double energy_fraction(const Eigen::VectorXd& s, std::size_t r) {
    const double total = s.squaredNorm();
    if (total == 0.0) return 1.0;
    const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(r), s.size());
    return s.head(n).squaredNorm() / total;
}

/// Cyclic one-sided Jacobi on the columns of `a` (square, modified in
/// place). On return the columns are mutually orthogonal to `tol`.
void one_sided_jacobi(Eigen::MatrixXd& a, const SvdOptions& opt) {
    const Eigen::Index n = a.cols();
    Eigen::VectorXd norms2 = a.colwise().squaredNorm().transpose();
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        double worst = 0.0;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = norms2(p), beta = norms2(q);
                if (alpha == 0.0 || beta == 0.0) continue;
                const double gamma = a.col(p).dot(a.col(q));
                const double off = std::abs(gamma) / std::sqrt(alpha * beta);
                worst = std::max(worst, off);
                if (off <= opt.tolerance) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index k = 0; k < a.rows(); ++k) {
                    const double ap = a(k, p), aq = a(k, q);
                    a(k, p) = c * ap - s * aq;
                    a(k, q) = s * ap + c * aq;
                }
                norms2(p) = a.col(p).squaredNorm();
                norms2(q) = a.col(q).squaredNorm();
            }
        }
        if (worst <= opt.tolerance) return;
    }
    throw ConvergenceError("one-sided Jacobi did not reach tolerance in " + std::to_string(opt.max_sweeps) +
                           " sweeps");
}

/// Modified Gram-Schmidt, twice, on columns [0, r). Columns whose norm
/// collapses are replaced by the first canonical vector that survives.
void orthonormalize(Eigen::MatrixXd& u, Eigen::Index r) {
    const Eigen::Index m = u.rows();
    Eigen::Index next_canonical = 0;
    for (Eigen::Index j = 0; j < r; ++j) {
        for (int attempt = 0;; ++attempt) {
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index i = 0; i < j; ++i) u.col(j) -= u.col(i).dot(u.col(j)) * u.col(i);
            }
            const double nrm = u.col(j).norm();
            if (nrm > 1e-8 && attempt == 0) {
                u.col(j) /= nrm;
                break;
            }
            if (nrm > 0.5 && attempt > 0) {
                u.col(j) /= nrm;
                break;
            }
            if (next_canonical >= m) throw ConvergenceError("cannot complete orthonormal basis");
            u.col(j).setZero();
            u(next_canonical++, j) = 1.0;
        }
    }
}

} // namespace

double SvdBasis::retained_energy() const { return energy_fraction(singular_values, rank()); }

double SvdBasis::discarded_energy() const {
    const double total = singular_values.squaredNorm();
    if (total == 0.0) return 0.0;
    const auto r = static_cast<Eigen::Index>(rank());
    return singular_values.tail(singular_values.size() - std::min(r, singular_values.size())).squaredNorm() / total;
}

SvdBasis truncated_svd(const Eigen::MatrixXd& x, std::size_t r_max, const SvdOptions& options, std::string field) {
    const Eigen::Index m = x.rows(), n = x.cols();
    const Eigen::Index k = std::min(m, n);
    if (k == 0) throw DimensionError("empty matrix");
    if (static_cast<Eigen::Index>(r_max) > k) {
        throw DimensionError("r_max " + std::to_string(r_max) + " exceeds min dimension " + std::to_string(k));
    }
    if (!x.allFinite()) throw DimensionError("non-finite snapshot matrix");

    // Work on the tall orientation: a = x (m >= n) or x^T (m < n).
    const bool tall = m >= n;
    const Eigen::MatrixXd a = tall ? x : Eigen::MatrixXd(x.transpose());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

    // Tall: x = Q R and Jacobi gives R V = U_R S, so x V = (Q U_R) S.
    // Wide: x = R^T Q^T and Jacobi on R^T gives R^T V = U S directly.
    if (tall) {
        one_sided_jacobi(r, options);
    } else {
        Eigen::MatrixXd rt = r.transpose();
        one_sided_jacobi(rt, options);
        r = std::move(rt);
    }

    Eigen::VectorXd sv = r.colwise().norm().transpose();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return sv(i) > sv(j); });

    SvdBasis basis;
    basis.field = std::move(field);
    basis.singular_values.resize(k);
    const auto rr = static_cast<Eigen::Index>(r_max);
    Eigen::MatrixXd small(k, rr);
    const double scale = sv.maxCoeff();
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto src = order[static_cast<std::size_t>(i)];
        basis.singular_values(i) = sv(src);
        if (i < rr) {
            if (sv(src) > 0.0 && sv(src) > 1e-300 * scale) {
                small.col(i) = r.col(src) / sv(src);
            } else {
                small.col(i).setZero();
            }
        }
    }

    Eigen::MatrixXd u;
    if (tall) {
        Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(m, rr);
        padded.topRows(k) = small;
        u = qr.householderQ() * padded;
    } else {
        u = small;
    }
    orthonormalize(u, rr);
    basis.modes = std::move(u);
    return basis;
}

std::size_t select_rank(const Eigen::VectorXd& s, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw DimensionError("energy threshold must lie in (0, 1)");
    const double total = s.squaredNorm();
    if (total == 0.0) throw EmptySpectrumError("all singular values are zero");
    double cum = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        cum += s(i) * s(i);
        if (cum / total >= threshold) return static_cast<std::size_t>(i + 1);
    }
    return static_cast<std::size_t>(s.size());
}

SvdBasis truncate(const SvdBasis& basis, std::size_t rank) {
    if (rank == 0 || rank > basis.rank()) throw DimensionError("cannot truncate to rank " + std::to_string(rank));
    return {basis.field, basis.modes.leftCols(static_cast<Eigen::Index>(rank)), basis.singular_values};
}

ReducedTrajectory project(const SvdBasis& basis, const Eigen::MatrixXd& x) {
    if (x.rows() != basis.modes.rows()) {
        throw DimensionError("project: basis has " + std::to_string(basis.modes.rows()) + " dofs, data " +
                             std::to_string(x.rows()));
    }
    return {basis.field, basis.modes.transpose() * x};
}

Eigen::MatrixXd lift(const SvdBasis& basis, const Eigen::MatrixXd& coeffs) {
    if (coeffs.rows() != basis.modes.cols()) {
        throw DimensionError("lift: basis rank " + std::to_string(basis.modes.cols()) + ", coefficients " +
                             std::to_string(coeffs.rows()));
    }
    return basis.modes * coeffs;
}

StackedReduced stack_reduced(const std::vector<ReducedTrajectory>& per_field) {
    StackedReduced out;
    if (per_field.empty()) return out;
    const auto n_t = per_field.front().coeffs.cols();
    Eigen::Index total = 0;
    for (std::size_t f = 0; f < per_field.size(); ++f) {
        if (f > 0 && field_rank(per_field[f].field) <= field_rank(per_field[f - 1].field)) {
            throw OrderError("field '" + per_field[f].field + "' out of canonical order");
        }
        if (per_field[f].coeffs.cols() != n_t) throw DimensionError("fields disagree on N_t");
        out.fields.push_back(per_field[f].field);
        out.offsets.push_back(static_cast<std::size_t>(total));
        out.ranks.push_back(per_field[f].rank());
        total += per_field[f].coeffs.rows();
    }
    out.coeffs.resize(total, n_t);
    for (std::size_t f = 0; f < per_field.size(); ++f) {
        out.coeffs.middleRows(static_cast<Eigen::Index>(out.offsets[f]), per_field[f].coeffs.rows()) =
            per_field[f].coeffs;
    }
    return out;
}

std::vector<ReducedTrajectory> unstack(const StackedReduced& layout, const Eigen::MatrixXd& coeffs) {
    if (coeffs.rows() != static_cast<Eigen::Index>(std::accumulate(layout.ranks.begin(), layout.ranks.end(),
                                                                   std::size_t{0}))) {
        throw DimensionError("unstack: row count does not match layout");
    }
    std::vector<ReducedTrajectory> out;
    for (std::size_t f = 0; f < layout.fields.size(); ++f) {
        out.push_back({layout.fields[f], coeffs.middleRows(static_cast<Eigen::Index>(layout.offsets[f]),
                                                           static_cast<Eigen::Index>(layout.ranks[f]))});
    }
    return out;
}

std::vector<ReducedTrajectory> unstack(const StackedReduced& stacked) { return unstack(stacked, stacked.coeffs); }

void save_bases(const std::vector<SvdBasis>& bases, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    io::write_magic(os, kBasisMagic);
    io::write_u16(os, kBasisVersion);
    io::write_u64(os, bases.size());
    for (const auto& b : bases) {
        io::write_string(os, b.field);
        io::write_u64(os, b.n_dofs());
        io::write_u64(os, b.rank());
        io::write_u64(os, static_cast<std::uint64_t>(b.singular_values.size()));
        io::write_f64_array(os, b.singular_values.data(), static_cast<std::size_t>(b.singular_values.size()));
        io::write_matrix_rowmajor(os, b.modes);
    }
    if (!os) throw FormatError("write failed for " + path.string());
}

std::vector<SvdBasis> load_bases(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    io::expect_magic(is, kBasisMagic);
    if (io::read_u16(is) != kBasisVersion) throw FormatError("unsupported basis version");
    const auto n = io::read_u64(is);
    if (n > 64) throw FormatError("implausible basis count");
    std::vector<SvdBasis> out;
    for (std::uint64_t f = 0; f < n; ++f) {
        SvdBasis b;
        b.field = io::read_string(is, 64);
        const auto dofs = io::read_u64(is);
        const auto rank = io::read_u64(is);
        const auto n_sv = io::read_u64(is);
        if (n_sv > (1u << 24) || rank > n_sv) throw FormatError("implausible basis header");
        b.singular_values.resize(static_cast<Eigen::Index>(n_sv));
        io::read_exact(is, b.singular_values.data(), n_sv * sizeof(double));
        b.modes = io::read_matrix_rowmajor(is, dofs, rank);
        out.push_back(std::move(b));
    }
    return out;
}

void export_spectra_csv(const std::vector<SvdBasis>& bases, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open " + path.string());
    os.precision(17);
    os << "field,index,singular_value,discarded_energy\n";
    for (const auto& b : bases) {
        const double total = b.singular_values.squaredNorm();
        double cum = 0.0;
        for (Eigen::Index i = 0; i < b.singular_values.size(); ++i) {
            cum += b.singular_values(i) * b.singular_values(i);
            os << b.field << ',' << i + 1 << ',' << b.singular_values(i) << ','
               << (total > 0 ? std::max(0.0, 1.0 - cum / total) : 0.0) << '\n';
        }
    }
}

} // namespace shred
