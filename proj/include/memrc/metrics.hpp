#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "memrc/readout.hpp"
#include "memrc/reservoir.hpp"
#include "memrc/tasks.hpp"

namespace memrc {

enum class NmseDef { eq7, eq8 };

// eq7 normalizes by the target power, eq8 by the target variance.
double nmse(const std::vector<double>& pred, const std::vector<double>& truth,
            NmseDef definition = NmseDef::eq7);

struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

    std::size_t total() const;
    double accuracy() const;  // trace / total
};

ConfusionMatrix confusion(const std::vector<int>& predicted,
                          const std::vector<int>& truth);

struct ClassifierEval {
    double accuracy;
    ConfusionMatrix matrix;
};

ClassifierEval evaluate_classifier(const FcReadout& model,
                                   const StateMatrix& features,
                                   const std::vector<int>& labels);
ClassifierEval evaluate_classifier(const ConvFcReadout& model,
                                   const std::vector<FeatureBlock>& features,
                                   const std::vector<int>& labels);

// Encoding-parameter search space; defaults are 20 points per axis, linear
// in the voltages and log-spaced in the hold time.
struct GridSpec {
    std::vector<double> gamma_grid;  // V
    std::vector<double> delta_grid;  // V
    std::vector<double> dt_grid;     // s

    void validate() const;
    static GridSpec default_grid(std::size_t gamma_points = 20,
                                 std::size_t delta_points = 20,
                                 std::size_t dt_points = 20);
};

struct GridCell {
    double gamma, delta, dt_hold;
    double nmse_train = 0.0, nmse_test = 0.0;        // eq7
    double nmse_train_eq8 = 0.0, nmse_test_eq8 = 0.0;
    std::string error;  // non-empty when this cell failed

    bool failed() const { return !error.empty(); }
};

// Full simulated pipeline per cell over a fixed train/test dataset pair;
// returns every cell sorted by test NMSE (failed cells last).  threads = 0
// means hardware concurrency.
std::vector<GridCell> grid_search(const ReservoirConfig& config,
                                  const GridSpec& grid,
                                  const SondsDataset& train,
                                  const SondsDataset& test,
                                  std::size_t washout = 50,
                                  std::size_t threads = 0);

// One cell of the SONDS pipeline: encode, drive, z-score on train
// statistics, OLS, score.  Shared by grid_search and the CLI.
GridCell evaluate_sonds_cell(const ReservoirConfig& config,
                             const SondsDataset& train,
                             const SondsDataset& test, double gamma,
                             double delta, double dt_hold,
                             std::size_t washout,
                             LinearReadout* model_out = nullptr,
                             std::vector<double>* pred_train = nullptr,
                             std::vector<double>* pred_test = nullptr);

}  // namespace memrc
