#include <doctest.h>

#include <numbers>

#include "shred/error.hpp"
#include "shred/synthgen.hpp"
#include "test_util.hpp"

using namespace shred;
using namespace shred::synthgen;

namespace {

SolverConfig short_run(std::size_t steps = 1000) {
    auto c = default_config();
    c.steps = steps;
    c.stride = 100;
    return c;
}

SolverConfig closed_box(std::uint64_t seed) {
    SolverConfig c;
    c.nx = c.ny = 16;
    c.dt = 0.05;
    c.gravity = 0.0;
    c.top_dirichlet = false;
    c.steps = 1000;
    c.stride = 100;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(290.0, 310.0);
    for (std::size_t k = 0; k < c.nx * c.ny; ++k) c.t_initial_field.push_back(u(rng));
    return c;
}

} // namespace

TEST_CASE("heat flux law") {
    CHECK(heat_flux(0.3, {0.0, 5.0, 1.0, 2.5}) == 2.5);
    CHECK(heat_flux(0.5, {1.0, std::numbers::pi, 0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("heat flux integrates to the closed-form antiderivative") {
    const HeatFluxLaw law{6e-3, std::numbers::pi / 0.3125, 0.4, 2e-3};
    const double h = 0.3125;
    const double exact = law.a / law.b * (std::cos(law.c) - std::cos(law.b * h + law.c)) + law.d * h;
    // Composite Simpson with 2000 panels.
    const int n = 2000;
    double s = heat_flux(0.0, law) + heat_flux(h, law);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * heat_flux(h * k / n, law);
    s *= h / (3.0 * n);
    CHECK(std::abs(s - exact) <= 1e-10 * std::abs(exact));
}

TEST_CASE("without heating the state stays at rest") {
    auto c = short_run(500);
    c.flux = {0.0, c.flux.b, c.flux.c, 0.0};
    const auto r = simulate(c);
    CHECK(r.state.n_times() == 5);
    for (const auto& f : r.state.fields()) {
        const double expect = f.name() == "T" ? c.t_init : 0.0;
        CHECK((f.data().array() - expect).abs().maxCoeff() == 0.0);
    }
}

TEST_CASE("closed adiabatic box without gravity conserves thermal energy") {
    const auto c = closed_box(4);
    const auto r = simulate(c);
    const Grid g = c.grid();
    const auto& t = r.state.field("T").data();
    double prev = 0.0;
    for (double v : c.t_initial_field) prev += v * g.dx * g.dy;
    const double e0 = prev;
    for (Eigen::Index k = 0; k < t.cols(); ++k) {
        const double e = t.col(k).sum() * g.dx * g.dy;
        CHECK(std::abs(e - prev) / e0 < 1e-6);
        prev = e;
    }
    // Diffusion alone must have smoothed the field.
    const Eigen::VectorXd t0 = Eigen::Map<const Eigen::VectorXd>(c.t_initial_field.data(), 256);
    CHECK(t.col(t.cols() - 1).maxCoeff() - t.col(t.cols() - 1).minCoeff() < t0.maxCoeff() - t0.minCoeff());
    CHECK(r.state.field("ux").data().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("heated transient keeps the velocity divergence-free and warms the domain") {
    const auto c = short_run(1500);
    const auto r = simulate(c);
    CHECK(r.diagnostics.max_divergence <= 10.0 * c.poisson_tol);
    CHECK(r.diagnostics.max_cfl < 1.0);
    const auto& mean_t = r.diagnostics.mean_temperature;
    REQUIRE(mean_t.size() == 15);
    for (std::size_t k = 1; k < mean_t.size(); ++k) CHECK(mean_t[k] > mean_t[k - 1]);
    CHECK(r.state.field("uy").data().cwiseAbs().maxCoeff() > 0.0);
    for (const char* name : {"kappa", "omega"}) CHECK(r.state.field(name).data().minCoeff() >= 0.0);
    CHECK(r.state.times().front() == doctest::Approx(100 * c.dt));
}

TEST_CASE("simulation is deterministic") {
    const auto c = short_run(300);
    CHECK(simulate(c).state == simulate(c).state);
}

TEST_CASE("turbulence proxies vanish at rest and follow uniform shear exactly") {
    const Grid g{8, 6, 0.1, 0.05};
    VelocityField rest{g, Eigen::VectorXd::Zero(48), Eigen::VectorXd::Zero(48)};
    const auto z = turbulence_proxy(rest, 0.01);
    CHECK(z.kappa.cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.omega.cwiseAbs().maxCoeff() == 0.0);

    const double gamma = 3.0;
    VelocityField shear{g, Eigen::VectorXd::Zero(48), Eigen::VectorXd::Zero(48)};
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            shear.ux(static_cast<Eigen::Index>(g.index(i, j))) = gamma * (static_cast<double>(j) + 0.5) * g.dy;
        }
    }
    const auto s = turbulence_proxy(shear, 0.01);
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double ell = mixing_length(g, i, j);
            const auto k = static_cast<Eigen::Index>(g.index(i, j));
            CHECK(s.kappa(k) == doctest::Approx(0.01 * gamma * gamma * ell * ell).epsilon(1e-12));
            CHECK(s.omega(k) == doctest::Approx(std::sqrt(s.kappa(k)) / ell).epsilon(1e-12));
        }
    }
}

TEST_CASE("turbulence proxy matches an independent gradient stencil") {
    const Grid g{7, 5, 0.1, 0.2};
    VelocityField v{g, testutil::gaussian_matrix(35, 1, 1).col(0), testutil::gaussian_matrix(35, 1, 2).col(0)};
    const auto out = turbulence_proxy(v, 0.02);
    auto val = [&](const Eigen::VectorXd& f, long i, long j) { return f(j * 7 + i); };
    // Forward/backward at the edges, centred inside.
    auto deriv = [&](const Eigen::VectorXd& f, long i, long j, bool along_x) {
        const long n = along_x ? 7 : 5;
        const long p = along_x ? i : j;
        const double h = along_x ? g.dx : g.dy;
        const long lo = std::max(0L, p - 1), hi = std::min(n - 1, p + 1);
        auto pick = [&](long q) { return along_x ? val(f, q, j) : val(f, i, q); };
        return (pick(hi) - pick(lo)) / (static_cast<double>(hi - lo) * h);
    };
    for (long j = 0; j < 5; ++j) {
        for (long i = 0; i < 7; ++i) {
            const double s = std::pow(deriv(v.ux, i, j, true), 2) + std::pow(deriv(v.ux, i, j, false), 2) +
                             std::pow(deriv(v.uy, i, j, true), 2) + std::pow(deriv(v.uy, i, j, false), 2);
            const double ell = mixing_length(g, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            const double kappa = 0.02 * s * ell * ell;
            CHECK(std::abs(out.kappa(j * 7 + i) - kappa) <= 1e-12 * std::max(1.0, kappa));
        }
    }
}

TEST_CASE("mixing length is floored at half a cell") {
    const Grid g{10, 10, 0.1, 0.1};
    CHECK(mixing_length(g, 0, 5) == doctest::Approx(0.05));
    CHECK(mixing_length(g, 4, 4) == doctest::Approx(0.45));
}

TEST_CASE("perturbation parsing and variants") {
    const auto p = parse_perturbation("heater_scale=1.02");
    CHECK(p.kind == PerturbationKind::HeaterScale);
    CHECK(p.value == 1.02);
    CHECK(parse_perturbation("top_recirculation=0.1").kind == PerturbationKind::TopRecirculation);
    CHECK(parse_perturbation("viscosity_scale=2").kind == PerturbationKind::ViscosityScale);
    CHECK_THROWS_AS((void)parse_perturbation("wind=3"), UnknownPerturbation);
    CHECK_THROWS_AS((void)parse_perturbation("heater_scale"), UnknownPerturbation);
    CHECK_THROWS_AS((void)parse_perturbation("heater_scale=abc"), UnknownPerturbation);

    const auto base = short_run(400);
    const auto same = perturbed_variant(base, parse_perturbation("heater_scale=1.0"));
    CHECK(simulate(same).state == simulate(base).state);
}

TEST_CASE("stronger heating gives a warmer domain") {
    const auto base = short_run(1000);
    const auto hot = perturbed_variant(base, parse_perturbation("heater_scale=1.02"));
    const auto a = simulate(base).diagnostics.mean_temperature;
    const auto b = simulate(hot).diagnostics.mean_temperature;
    CHECK(b.back() > a.back());
}

TEST_CASE("top recirculation cools the region under the top boundary") {
    const auto base = short_run(1000);
    const auto cold = perturbed_variant(base, parse_perturbation("top_recirculation=0.1"));
    const auto a = simulate(base).state.field("T").data();
    const auto b = simulate(cold).state.field("T").data();
    const Grid g = base.grid();
    const auto last = a.cols() - 1;
    double da = 0.0, db = 0.0;
    for (std::size_t j = g.ny - base.recirc_depth; j < g.ny; ++j) {
        for (std::size_t i = base.recirc_col0; i < base.recirc_col1; ++i) {
            da += a(static_cast<Eigen::Index>(g.index(i, j)), last);
            db += b(static_cast<Eigen::Index>(g.index(i, j)), last);
        }
    }
    CHECK(db < da);
}

TEST_CASE("invalid solver configs are rejected") {
    auto c = default_config();
    c.dt = 10.0;
    CHECK_THROWS_AS(validate(c), CflError);
    c = default_config();
    c.stride = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = default_config();
    c.heaters.push_back({60, 70, 0, 4, 1.0});
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = default_config();
    c.t_initial_field = {1.0, 2.0};
    CHECK_THROWS_AS(validate(c), ConfigError);
    CHECK_NOTHROW(validate(default_config()));
}
