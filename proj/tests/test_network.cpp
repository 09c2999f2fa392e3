#include <doctest.h>

#include <fstream>

#include "network_oracle.hpp"
#include "shred/error.hpp"
#include "shred/network.hpp"
#include "test_util.hpp"

using namespace shred;

namespace {

ShredModel small_model(std::uint64_t seed, std::size_t s = 3, std::size_t lag = 4) {
    ShredModel m({s, 6, 2, {7, 5}, 4}, lag, {{"T", "ux"}, {3, 1}});
    m.init_uniform(seed);
    return m;
}

// y = mean of the last two rows of sensor 0, a single reduced coefficient.
SequenceDataset smooth_problem(std::size_t n, std::size_t lag, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SequenceDataset d;
    d.targets.resize(1, static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const double phase = 6.283185307179586 * u(rng);
        Eigen::MatrixXd w(static_cast<Eigen::Index>(lag) + 1, 2);
        for (Eigen::Index t = 0; t < w.rows(); ++t) {
            w(t, 0) = 0.5 + 0.4 * std::sin(phase + 0.3 * static_cast<double>(t));
            w(t, 1) = 0.5 + 0.4 * std::cos(phase + 0.3 * static_cast<double>(t));
        }
        d.targets(0, static_cast<Eigen::Index>(k)) = 0.5 * (w(w.rows() - 1, 0) + w(w.rows() - 2, 0));
        d.windows.push_back(w);
    }
    return d;
}

std::vector<std::size_t> range(std::size_t a, std::size_t b) {
    std::vector<std::size_t> r;
    for (std::size_t k = a; k < b; ++k) r.push_back(k);
    return r;
}

} // namespace

TEST_CASE("zero parameters give a zero latent state and the output bias") {
    ShredModel m({3, 5, 2, {4}, 2}, 2, {{"T"}, {2}});
    m.parameters().setZero();
    m.decoder_bias(1) << 0.25, -1.5;
    const Eigen::MatrixXd w = testutil::random_matrix(3, 3, 1);
    CHECK(m.encode(w).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd y = m.decode(m.encode(w));
    CHECK(y[0] == 0.25);
    CHECK(y[1] == -1.5);
}

TEST_CASE("a single LSTM unit matches a hand computation") {
    ShredModel m({1, 1, 1, {}, 1}, 1, {{"T"}, {1}});
    m.parameters().setZero();
    m.lstm_input_weights(0) << 0.5, -0.25, 1.0, 0.75;
    m.lstm_recurrent_weights(0) << 0.1, 0.2, -0.3, 0.4;
    m.lstm_bias(0) << 0.0, 1.0, 0.0, 0.0;
    m.decoder_weights(0)(0, 0) = 2.0;
    m.decoder_bias(0)[0] = 0.5;
    Eigen::MatrixXd w(2, 1);
    w << 1.0, -2.0;

    using testutil::logistic;
    // t = 0 from zero state
    const double c0 = logistic(0.5) * std::tanh(1.0);
    const double h0 = logistic(0.75) * std::tanh(c0);
    // t = 1
    const double i1 = logistic(-1.0 + 0.1 * h0);
    const double f1 = logistic(0.5 + 1.0 + 0.2 * h0);
    const double g1 = std::tanh(-2.0 - 0.3 * h0);
    const double o1 = logistic(-1.5 + 0.4 * h0);
    const double c1 = f1 * c0 + i1 * g1;
    const double h1 = o1 * std::tanh(c1);

    CHECK(m.encode(w)[0] == doctest::Approx(h1).epsilon(1e-13));
    CHECK(m.decode(m.encode(w))[0] == doctest::Approx(2.0 * h1 + 0.5).epsilon(1e-13));
}

TEST_CASE("forward pass agrees with the scalar reference") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = small_model(seed);
        std::vector<Eigen::MatrixXd> windows;
        for (std::uint64_t k = 0; k < 9; ++k) windows.push_back(testutil::gaussian_matrix(5, 3, 50 + 10 * seed + k));
        const Eigen::MatrixXd y = m.predict(windows);
        for (std::size_t k = 0; k < windows.size(); ++k) {
            const auto ref = testutil::reference_forward(m, windows[k]);
            CHECK((y.col(static_cast<Eigen::Index>(k)) - ref).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("prediction in large batches matches per-window decoding") {
    const auto m = small_model(3);
    std::vector<Eigen::MatrixXd> windows;
    for (std::uint64_t k = 0; k < 300; ++k) windows.push_back(testutil::gaussian_matrix(5, 3, 1000 + k));
    const Eigen::MatrixXd y = m.predict(windows);
    for (std::size_t k : {0u, 127u, 128u, 299u}) {
        CHECK((y.col(static_cast<Eigen::Index>(k)) - m.decode(m.encode(windows[k]))).cwiseAbs().maxCoeff() <= 1e-13);
    }
}

TEST_CASE("the earliest window row influences the output") {
    const auto m = small_model(4);
    Eigen::MatrixXd a = testutil::gaussian_matrix(5, 3, 7);
    Eigen::MatrixXd b = a;
    b.row(0).array() += 0.5;
    CHECK((m.decode(m.encode(a)) - m.decode(m.encode(b))).norm() > 0.0);
}

TEST_CASE("window and latent shapes are checked") {
    const auto m = small_model(1);
    CHECK_THROWS_AS((void)m.encode(Eigen::MatrixXd::Zero(4, 3)), ShapeError);
    CHECK_THROWS_AS((void)m.encode(Eigen::MatrixXd::Zero(5, 2)), ShapeError);
    CHECK_THROWS_AS((void)m.decode(Eigen::VectorXd::Zero(5)), ShapeError);
    CHECK_THROWS_AS(ShredModel({3, 6, 2, {7}, 4}, 4, {{"T"}, {3}}), ShapeError);
}

TEST_CASE("loss is the mean squared l2 error") {
    ShredModel m({1, 2, 1, {3}, 2}, 0, {{"T"}, {2}});
    m.parameters().setZero();
    SequenceDataset d;
    d.windows = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    d.targets.resize(2, 2);
    d.targets << 2, 0, 0, 0;  // norms 2 and 0
    const std::vector<std::size_t> first{0}, both{0, 1};
    CHECK(loss(m, d, first) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(loss(m, d, both) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("loss agrees with a loop over reference predictions") {
    auto p = testutil::tiny_gradient_problem(5, 0.3, 7);
    double acc = 0.0;
    for (auto k : p.batch) {
        acc += (testutil::reference_forward(p.model, p.data.windows[k]) - p.data.targets.col(static_cast<Eigen::Index>(k)))
                   .squaredNorm();
    }
    CHECK(loss(p.model, p.data, p.batch) == doctest::Approx(acc / 7.0).epsilon(1e-12));
    CHECK(gradients(p.model, p.data, p.batch).loss == doctest::Approx(acc / 7.0).epsilon(1e-12));
}

TEST_CASE("zero residual yields a zero gradient") {
    auto p = testutil::tiny_gradient_problem(2, 0.0);
    CHECK(gradients(p.model, p.data, p.batch).gradient.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("the gradient is linear in the residual") {
    auto p = testutil::tiny_gradient_problem(3, 0.0);
    const Eigen::MatrixXd pred = p.data.targets;
    const Eigen::MatrixXd delta = testutil::gaussian_matrix(pred.rows(), pred.cols(), 9);
    p.data.targets = pred - delta;
    const auto g1 = gradients(p.model, p.data, p.batch).gradient;
    p.data.targets = pred - 2.0 * delta;
    const auto g2 = gradients(p.model, p.data, p.batch).gradient;
    CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() <= 1e-12 * g1.cwiseAbs().maxCoeff());
}

TEST_CASE("analytic gradient agrees with central finite differences") {
    using testutil::FdLoss;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        CHECK(testutil::max_gradient_rel_error(testutil::tiny_gradient_problem(seed, 0.1), FdLoss::Extended) < 1e-5);
    }
    // Differences of the double loss agree up to their own roundoff.
    CHECK(testutil::max_gradient_rel_error(testutil::tiny_gradient_problem(7, 0.1), FdLoss::Library) < 1e-3);
}

TEST_CASE("reference loss in long double matches the library loss") {
    const auto p = testutil::tiny_gradient_problem(4, 0.5, 6);
    const auto ext = testutil::reference_loss<long double>(p.model, p.data, p.batch);
    CHECK(static_cast<double>(ext) == doctest::Approx(loss(p.model, p.data, p.batch)).epsilon(1e-13));
}

TEST_CASE("training learns a smooth one-coefficient map") {
    const auto d = smooth_problem(240, 5, 1);
    ShredModel m({2, 8, 1, {16}, 1}, 5, {{"T"}, {1}});
    m.init_uniform(2);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 16;
    cfg.learning_rate = 3e-3;
    cfg.seed = 4;
    const auto r = train(m, d, range(0, 200), range(200, 240), cfg);
    CHECK(r.history.back().epoch <= 200);
    double best = r.initial_valid_loss;
    for (const auto& e : r.history) best = std::min(best, e.valid_loss);
    CHECK(best < 1e-4);
    CHECK(r.history[r.best_epoch - 1].valid_loss == best);
    CHECK(loss(r.model, d, range(200, 240)) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("zero learning rate leaves the parameters untouched") {
    const auto d = smooth_problem(40, 3, 2);
    ShredModel m({2, 4, 1, {5}, 1}, 3, {{"T"}, {1}});
    m.init_uniform(3);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.patience = 5;
    cfg.learning_rate = 0.0;
    const auto r = train(m, d, range(0, 30), range(30, 40), cfg);
    CHECK(r.model == m);
    CHECK(r.best_epoch == 0);
    REQUIRE(r.history.size() == 5);
    for (const auto& e : r.history) CHECK(e.valid_loss == r.initial_valid_loss);
}

TEST_CASE("training is deterministic and the best validation loss never exceeds the start") {
    const auto d = smooth_problem(60, 3, 3);
    ShredModel m({2, 4, 2, {6}, 1}, 3, {{"T"}, {1}});
    m.init_uniform(5);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.patience = 12;
    cfg.batch_size = 8;
    cfg.seed = 77;
    cfg.init_output_bias = true;
    const auto a = train(m, d, range(0, 45), range(45, 60), cfg);
    const auto b = train(m, d, range(0, 45), range(45, 60), cfg);
    CHECK(a.model == b.model);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t k = 0; k < a.history.size(); ++k) {
        CHECK(a.history[k].train_loss == b.history[k].train_loss);
        CHECK(a.history[k].valid_loss == b.history[k].valid_loss);
    }
    CHECK(loss(a.model, d, range(45, 60)) <= a.initial_valid_loss);
    cfg.seed = 78;
    CHECK_FALSE(train(m, d, range(0, 45), range(45, 60), cfg).model == a.model);
}

TEST_CASE("patience stops training early") {
    const auto d = smooth_problem(40, 3, 4);
    ShredModel m({2, 4, 1, {5}, 1}, 3, {{"T"}, {1}});
    m.init_uniform(1);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.patience = 3;
    cfg.learning_rate = 0.0;
    CHECK(train(m, d, range(0, 30), range(30, 40), cfg).history.size() == 3);
}

TEST_CASE("non-finite targets raise DivergenceError") {
    auto d = smooth_problem(20, 3, 5);
    d.targets(0, 2) = std::numeric_limits<double>::quiet_NaN();
    ShredModel m({2, 4, 1, {5}, 1}, 3, {{"T"}, {1}});
    m.init_uniform(1);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.patience = 2;
    CHECK_THROWS_AS((void)train(m, d, range(0, 15), range(15, 20), cfg), DivergenceError);
}

TEST_CASE("invalid training settings raise ConfigError") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.patience = cfg.epochs + 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("checkpoint round trip is bit exact") {
    testutil::TempDir dir("ckpt");
    const auto m = small_model(9);
    TrainConfig echo;
    echo.learning_rate = 3e-4;
    echo.seed = 12345;
    echo.init_output_bias = true;
    m.save(dir / "m.shrm", echo);
    TrainConfig back_cfg;
    const auto back = ShredModel::load(dir / "m.shrm", &back_cfg);
    CHECK(back == m);
    CHECK(back.layout() == m.layout());
    CHECK(back.lag() == m.lag());
    CHECK(back_cfg.learning_rate == echo.learning_rate);
    CHECK(back_cfg.seed == echo.seed);
    CHECK(back_cfg.init_output_bias);
    const Eigen::MatrixXd w = testutil::gaussian_matrix(5, 3, 2);
    CHECK(back.decode(back.encode(w)) == m.decode(m.encode(w)));

    const auto bytes = testutil::slurp(dir / "m.shrm");
    std::ofstream(dir / "t.shrm", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
    CHECK_THROWS_AS((void)ShredModel::load(dir / "t.shrm"), FormatError);
    {
        std::ofstream os(dir / "x.shrm", std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        os << "junk";
    }
    CHECK_THROWS_AS((void)ShredModel::load(dir / "x.shrm"), FormatError);
}

TEST_CASE("history export has one row per epoch") {
    testutil::TempDir dir("hist");
    save_history_csv({{1, 0.5, 0.25}, {2, 0.125, 0.0625}}, dir / "h.csv");
    std::ifstream is(dir / "h.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "epoch,train_loss,valid_loss");
    std::getline(is, line);
    CHECK(line == "1,0.5,0.25");
}
