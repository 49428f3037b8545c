#include <cmath>
#include <vector>

#include <doctest.h>

#include "memrc/device.hpp"
#include "memrc/errors.hpp"
#include "memrc/metrics.hpp"
#include "memrc/tasks.hpp"

using namespace memrc;

TEST_CASE("nmse definitions") {
    const std::vector<double> truth = {0.2, 0.1, 0.3, 0.25};
    CHECK(nmse(truth, truth, NmseDef::eq7) == 0.0);
    CHECK(nmse(truth, truth, NmseDef::eq8) == 0.0);

    // the zero predictor scores exactly 1 under eq7
    const std::vector<double> zeros(truth.size(), 0.0);
    CHECK(nmse(zeros, truth, NmseDef::eq7) == doctest::Approx(1.0).epsilon(1e-15));

    // zero-mean targets collapse eq8 onto eq7
    const std::vector<double> centered = {0.1, -0.2, 0.3, -0.2};
    const std::vector<double> pred = {0.05, -0.1, 0.2, -0.15};
    CHECK(nmse(pred, centered, NmseDef::eq7) ==
          doctest::Approx(nmse(pred, centered, NmseDef::eq8)).epsilon(1e-15));

    // positivity: any mismatch scores > 0
    CHECK(nmse(pred, centered, NmseDef::eq7) > 0.0);

    CHECK_THROWS_AS(nmse({1.0}, {1.0, 2.0}), invalid_input);
    CHECK_THROWS_AS(nmse({}, {}), invalid_input);
    CHECK_THROWS_AS(nmse(zeros, zeros, NmseDef::eq7), invalid_input);
    CHECK_THROWS_AS(nmse(truth, std::vector<double>(4, 0.3), NmseDef::eq8),
                    invalid_input);
}

TEST_CASE("confusion matrix accounting") {
    const std::vector<int> truth = {0, 0, 1, 1, 2, 2, 3, 3};
    const std::vector<int> perfect = truth;
    const ConfusionMatrix cm = confusion(perfect, truth);
    CHECK(cm.total() == 8);
    CHECK(cm.accuracy() == 1.0);
    for (std::size_t c = 0; c < kNumClasses; ++c) CHECK(cm.counts[c][c] == 2);

    // constant single-class predictor on a balanced set
    const std::vector<int> constant(8, 2);
    const ConfusionMatrix cc = confusion(constant, truth);
    CHECK(cc.accuracy() == doctest::Approx(0.25));
    CHECK(cc.counts[0][2] == 2);
    CHECK(cc.counts[2][2] == 2);

    // row sums are the per-class truth counts
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::size_t row = 0;
        for (std::size_t p = 0; p < kNumClasses; ++p) row += cc.counts[c][p];
        CHECK(row == 2);
    }

    CHECK_THROWS_AS(confusion({0, 1}, {0}), invalid_input);
    CHECK_THROWS_AS(confusion({0, 4}, {0, 1}), invalid_input);
}

TEST_CASE("classifier evaluation matches manual accounting") {
    FcReadout model;
    model.in_dim = 1;
    // weights make the class index follow the sign/magnitude of the feature
    model.w = {1.0, -1.0, 2.0, -2.0};
    model.b = {0.0, 0.0, 0.0, 0.0};
    StateMatrix x;
    x.rows = 4;
    x.cols = 1;
    x.values = {1.0, -1.0, 0.5, -2.0};
    const std::vector<int> labels = {2, 3, 2, 3};
    const ClassifierEval eval = evaluate_classifier(model, x, labels);
    CHECK(eval.accuracy == doctest::Approx(1.0));
    CHECK(eval.matrix.total() == 4);
}

TEST_CASE("default grid covers both published operating points") {
    const GridSpec grid = GridSpec::default_grid();
    REQUIRE(grid.gamma_grid.size() == 20);
    REQUIRE(grid.delta_grid.size() == 20);
    REQUIRE(grid.dt_grid.size() == 20);
    CHECK(grid.gamma_grid.front() == doctest::Approx(0.020));
    CHECK(grid.gamma_grid.back() == doctest::Approx(0.200));
    CHECK(grid.delta_grid.front() == doctest::Approx(0.0));
    CHECK(grid.delta_grid.back() == doctest::Approx(0.150));
    CHECK(grid.dt_grid.front() == doctest::Approx(0.5e-3));
    CHECK(grid.dt_grid.back() == doctest::Approx(20e-3));
    // log spacing: constant ratio between hold times
    const double ratio = grid.dt_grid[1] / grid.dt_grid[0];
    for (std::size_t k = 2; k < grid.dt_grid.size(); ++k)
        CHECK(grid.dt_grid[k] / grid.dt_grid[k - 1] ==
              doctest::Approx(ratio).epsilon(1e-10));

    GridSpec bad;
    CHECK_THROWS_AS(bad.validate(), invalid_input);
}

TEST_CASE("grid search is deterministic, sorted, and order independent") {
    ReservoirConfig rc;
    rc.devices = table_presets();
    auto [train, test] = gen_sonds(120, 60, 42);

    GridSpec grid;
    grid.gamma_grid = {0.070, 0.160};
    grid.delta_grid = {0.050, 0.090};
    grid.dt_grid = {1e-3, 3e-3};

    const auto serial = grid_search(rc, grid, train, test, 20, 1);
    const auto parallel = grid_search(rc, grid, train, test, 20, 4);
    REQUIRE(serial.size() == 8);
    REQUIRE(parallel.size() == 8);
    for (std::size_t k = 0; k < serial.size(); ++k) {
        CHECK(serial[k].gamma == parallel[k].gamma);
        CHECK(serial[k].delta == parallel[k].delta);
        CHECK(serial[k].dt_hold == parallel[k].dt_hold);
        CHECK(serial[k].nmse_test == parallel[k].nmse_test);
    }
    for (std::size_t k = 1; k < serial.size(); ++k)
        CHECK(serial[k].nmse_test >= serial[k - 1].nmse_test);

    // single-cell grid
    GridSpec single;
    single.gamma_grid = {0.070};
    single.delta_grid = {0.050};
    single.dt_grid = {3e-3};
    const auto one = grid_search(rc, single, train, test, 20);
    REQUIRE(one.size() == 1);
    CHECK_FALSE(one[0].failed());

    // the shared-cell evaluator reports the same numbers as the search
    const GridCell direct =
        evaluate_sonds_cell(rc, train, test, 0.070, 0.050, 3e-3, 20);
    CHECK(direct.nmse_test == one[0].nmse_test);
    CHECK(direct.nmse_train == one[0].nmse_train);
}

TEST_CASE("refining the grid around the best cell never hurts") {
    ReservoirConfig rc;
    rc.devices = table_presets();
    auto [train, test] = gen_sonds(120, 60, 13);

    GridSpec coarse;
    coarse.gamma_grid = {0.040, 0.100, 0.180};
    coarse.delta_grid = {0.020, 0.080};
    coarse.dt_grid = {1e-3, 6e-3};
    const auto ranked = grid_search(rc, coarse, train, test, 20);
    const GridCell& best = ranked.front();

    GridSpec fine;
    fine.gamma_grid = {best.gamma * 0.8, best.gamma, best.gamma * 1.2};
    fine.delta_grid = {best.delta};
    fine.dt_grid = {best.dt_hold};
    const auto refined = grid_search(rc, fine, train, test, 20);
    CHECK(refined.front().nmse_test <= best.nmse_test + 1e-15);
}

TEST_CASE("per-cell failures are recorded without aborting the sweep") {
    ReservoirConfig rc;
    rc.devices = table_presets();
    auto [train, test] = gen_sonds(120, 60, 99);

    GridSpec grid;
    grid.gamma_grid = {0.070};
    grid.delta_grid = {0.050};
    // a held interval shorter than one integration step cannot be encoded
    grid.dt_grid = {1e-6, 3e-3};
    const auto ranked = grid_search(rc, grid, train, test, 20);
    REQUIRE(ranked.size() == 2);
    CHECK_FALSE(ranked.front().failed());
    CHECK(ranked.back().failed());
    CHECK_FALSE(ranked.back().error.empty());
}
