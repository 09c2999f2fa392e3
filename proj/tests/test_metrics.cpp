#include <doctest.h>

#include <fstream>

#include "shred/datamodel.hpp"
#include "shred/error.hpp"
#include "shred/metrics.hpp"
#include "test_util.hpp"

using namespace shred;

TEST_CASE("relative error of simple columns") {
    Eigen::MatrixXd t(2, 1), e(2, 1);
    t << 1, 0;
    e << 0, 1;
    CHECK(avg_relative_error(t, e).average == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(avg_relative_error(t, t).average == 0.0);
    e << 1.1, 0;
    CHECK(avg_relative_error(t, e).average == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("relative error agrees with a loop over columns") {
    const Eigen::MatrixXd t = testutil::gaussian_matrix(7, 11, 1);
    const Eigen::MatrixXd e = t + 0.1 * testutil::gaussian_matrix(7, 11, 2);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < 11; ++j) {
        double num = 0.0, den = 0.0;
        for (Eigen::Index i = 0; i < 7; ++i) {
            num += (t(i, j) - e(i, j)) * (t(i, j) - e(i, j));
            den += t(i, j) * t(i, j);
        }
        acc += std::sqrt(num / den);
    }
    const auto r = avg_relative_error(t, e);
    CHECK(r.average == doctest::Approx(acc / 11.0).epsilon(1e-13));
    CHECK(r.series.size() == 11);

    const auto sub = avg_relative_error(t, e, {2, 5});
    CHECK(sub.columns == std::vector<std::size_t>{2, 5});
    CHECK(sub.average == doctest::Approx(0.5 * (r.series[2] + r.series[5])).epsilon(1e-14));
}

TEST_CASE("zero-norm truth columns are skipped") {
    Eigen::MatrixXd t(2, 3), e(2, 3);
    t << 1, 0, 2, 0, 0, 0;
    e << 1, 5, 1, 0, 5, 0;
    const auto r = avg_relative_error(t, e);
    CHECK(r.skipped == std::vector<std::size_t>{1});
    CHECK(r.columns == std::vector<std::size_t>{0, 2});
    CHECK(r.average == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS((void)avg_relative_error(t, Eigen::MatrixXd::Zero(2, 2)), ShapeError);
}

TEST_CASE("relative error depends on the units it is measured in") {
    // Scaling to [0, 1] shifts the origin, so physical and scaled errors differ.
    Eigen::MatrixXd t(1, 3);
    t << 300, 305, 310;
    const Eigen::MatrixXd e = t.array() + 1.0;
    const MinMaxScaler scaler({{"T", 290.0, 320.0}});
    const double phys = avg_relative_error(t, e).average;
    const double scaled = avg_relative_error(scaler.apply("T", t), scaler.apply("T", e)).average;
    CHECK(scaled > 10.0 * phys);
}

TEST_CASE("update report classifies locations") {
    Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(3, 4);
    Eigen::MatrixXd base = Eigen::MatrixXd::Constant(3, 4, 1.0);
    Eigen::MatrixXd shred = Eigen::MatrixXd::Constant(3, 4, 0.5);
    shred.row(1).setConstant(2.0);
    shred.row(2).setConstant(1.0);
    const auto r = update_report(base, truth, shred, {0, 1, 2});
    REQUIRE(r.size() == 3);
    CHECK(r[0].verdict == Verdict::Closer);
    CHECK(r[1].verdict == Verdict::Farther);
    CHECK(r[2].verdict == Verdict::Tie);
    CHECK(r[0].baseline_distance == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(r[0].shred_distance == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(closer_fraction(r) == doctest::Approx(1.0 / 3.0));
    // A band wider than the gain turns Closer into Tie.
    CHECK(update_report(base, truth, shred, {0}, 1.5)[0].verdict == Verdict::Tie);
    CHECK(to_string(Verdict::Closer) == "closer");
}

TEST_CASE("degenerate update reports") {
    const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 3);
    const auto same = update_report(z, z, z, {0, 1});
    for (const auto& t : same) CHECK(t.verdict == Verdict::Tie);
    CHECK(closer_fraction({}) == 0.0);
    CHECK(update_report(z, z, z, {}).empty());
    CHECK_THROWS_AS((void)update_report(z, z, z, {2}), IndexError);
    CHECK_THROWS_AS((void)update_report(z, Eigen::MatrixXd::Zero(2, 2), z, {0}), ShapeError);
}

TEST_CASE("band coverage counts entries inside the band") {
    Eigen::MatrixXd t(1, 4), m(1, 4), s(1, 4);
    t << 0, 1, 2, 3;
    m << 0, 0, 0, 0;
    s << 1, 1, 1, 1;
    CHECK(band_coverage(t, m, s, 2.0) == 0.75);
    CHECK(band_coverage(t, m, s, 1.0) == 0.5);
}

TEST_CASE("error tables and grid dumps have the documented headers") {
    testutil::TempDir dir("metrics");
    const Eigen::MatrixXd t = testutil::gaussian_matrix(3, 4, 1);
    std::vector<FieldError> rows{{"T", "ext", avg_relative_error(t, t * 1.01)}};
    write_error_table_csv(rows, dir / "e.csv");
    write_error_series_csv(rows, dir / "s.csv");
    auto first_line = [](const std::filesystem::path& p) {
        std::ifstream is(p);
        std::string l;
        std::getline(is, l);
        return l;
    };
    CHECK(first_line(dir / "e.csv") == "field,channel,eps2,n_columns,n_skipped");
    CHECK(first_line(dir / "s.csv") == "field,channel,column,relative_error");
    const Grid g{2, 2, 1.0, 1.0};
    write_grid_dump(g, Eigen::VectorXd::Ones(4), Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), dir / "g.csv");
    CHECK(first_line(dir / "g.csv") == "i,j,x,y,truth,mean,residual,std");

    const auto traces = update_report(t, t, t, {0, 2});
    write_update_report(traces, {0.1, 0.2, 0.3, 0.4}, dir.path(), "u");
    CHECK(std::filesystem::exists(dir / "u_summary.csv"));
    CHECK(std::filesystem::exists(dir / "u_loc2.csv"));
}
