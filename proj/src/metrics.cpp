#include "memrc/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "memrc/errors.hpp"

namespace memrc {

double nmse(const std::vector<double>& pred, const std::vector<double>& truth,
            NmseDef definition) {
    if (pred.size() != truth.size() || truth.empty())
        throw invalid_input("nmse: need equal non-zero lengths");
    double num = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = pred[k] - truth[k];
        num += d * d;
    }
    double den = 0.0;
    if (definition == NmseDef::eq7) {
        for (double y : truth) den += y * y;
        if (!(den > 0.0))
            throw invalid_input("nmse: eq7 needs a non-zero target signal");
    } else {
        double mean = 0.0;
        for (double y : truth) mean += y;
        mean /= static_cast<double>(truth.size());
        for (double y : truth) den += (y - mean) * (y - mean);
        if (!(den > 0.0))
            throw invalid_input("nmse: eq8 needs a non-constant target signal");
    }
    return num / den;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
        for (std::size_t c : row) t += c;
    return t;
}

double ConfusionMatrix::accuracy() const {
    const std::size_t t = total();
    if (t == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) correct += counts[c][c];
    return static_cast<double>(correct) / static_cast<double>(t);
}

ConfusionMatrix confusion(const std::vector<int>& predicted,
                          const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw invalid_input("confusion: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (truth[k] < 0 || truth[k] >= static_cast<int>(kNumClasses) ||
            predicted[k] < 0 || predicted[k] >= static_cast<int>(kNumClasses))
            throw invalid_input("confusion: label out of range");
        ++cm.counts[truth[k]][predicted[k]];
    }
    return cm;
}

ClassifierEval evaluate_classifier(const FcReadout& model,
                                   const StateMatrix& features,
                                   const std::vector<int>& labels) {
    std::vector<int> pred(features.rows);
    for (std::size_t r = 0; r < features.rows; ++r)
        pred[r] = classify(model, features.row(r));
    const ConfusionMatrix cm = confusion(pred, labels);
    return {cm.accuracy(), cm};
}

ClassifierEval evaluate_classifier(const ConvFcReadout& model,
                                   const std::vector<FeatureBlock>& features,
                                   const std::vector<int>& labels) {
    std::vector<int> pred(features.size());
    for (std::size_t r = 0; r < features.size(); ++r)
        pred[r] = classify(model, features[r]);
    const ConfusionMatrix cm = confusion(pred, labels);
    return {cm.accuracy(), cm};
}

void GridSpec::validate() const {
    if (gamma_grid.empty() || delta_grid.empty() || dt_grid.empty())
        throw invalid_input("grid: all axes must be non-empty");
    for (double dt : dt_grid)
        if (!(dt > 0.0)) throw invalid_input("grid: dt values must be > 0");
}

GridSpec GridSpec::default_grid(std::size_t gamma_points,
                                std::size_t delta_points,
                                std::size_t dt_points) {
    auto linspace = [](double lo, double hi, std::size_t n) {
        std::vector<double> out(n);
        for (std::size_t j = 0; j < n; ++j)
            out[j] = n == 1 ? lo
                            : lo + (hi - lo) * static_cast<double>(j) /
                                       static_cast<double>(n - 1);
        return out;
    };
    auto logspace = [&](double lo, double hi, std::size_t n) {
        std::vector<double> out = linspace(std::log(lo), std::log(hi), n);
        for (double& x : out) x = std::exp(x);
        return out;
    };
    GridSpec g;
    g.gamma_grid = linspace(20e-3, 200e-3, gamma_points);
    g.delta_grid = linspace(0.0, 150e-3, delta_points);
    g.dt_grid = logspace(0.5e-3, 20e-3, dt_points);
    return g;
}

GridCell evaluate_sonds_cell(const ReservoirConfig& config,
                             const SondsDataset& train,
                             const SondsDataset& test, double gamma,
                             double delta, double dt_hold, std::size_t washout,
                             LinearReadout* model_out,
                             std::vector<double>* pred_train,
                             std::vector<double>* pred_test) {
    GridCell cell;
    cell.gamma = gamma;
    cell.delta = delta;
    cell.dt_hold = dt_hold;
    try {
        EncodingParams enc;
        enc.gamma = gamma;
        enc.delta = delta;
        enc.dt_hold = dt_hold;
        enc.sample_rate = 1.0 / config.integration.dt;
        const SondsRun tr = run_sonds(config, train, enc, washout);
        const SondsRun te = run_sonds(config, test, enc, washout);
        const Normalizer norm = Normalizer::fit(tr.states, NormMode::zscore);
        const StateMatrix xtr = norm.apply(tr.states);
        const StateMatrix xte = norm.apply(te.states);
        const LinearReadout model = train_linear(xtr, tr.targets);
        const std::vector<double> ptr = predict_linear(model, xtr);
        const std::vector<double> pte = predict_linear(model, xte);
        cell.nmse_train = nmse(ptr, tr.targets, NmseDef::eq7);
        cell.nmse_test = nmse(pte, te.targets, NmseDef::eq7);
        cell.nmse_train_eq8 = nmse(ptr, tr.targets, NmseDef::eq8);
        cell.nmse_test_eq8 = nmse(pte, te.targets, NmseDef::eq8);
        if (model_out) *model_out = model;
        if (pred_train) *pred_train = ptr;
        if (pred_test) *pred_test = pte;
    } catch (const std::exception& e) {
        cell.error = e.what();
    }
    return cell;
}

std::vector<GridCell> grid_search(const ReservoirConfig& config,
                                  const GridSpec& grid,
                                  const SondsDataset& train,
                                  const SondsDataset& test,
                                  std::size_t washout, std::size_t threads) {
    config.validate();
    grid.validate();
    const std::size_t total =
        grid.gamma_grid.size() * grid.delta_grid.size() * grid.dt_grid.size();
    std::vector<GridCell> cells(total);

    std::size_t n_threads = threads > 0
                                ? threads
                                : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, total);

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t idx = cursor.fetch_add(1);
            if (idx >= total) break;
            const std::size_t ig = idx / (grid.delta_grid.size() * grid.dt_grid.size());
            const std::size_t rem = idx % (grid.delta_grid.size() * grid.dt_grid.size());
            const std::size_t id = rem / grid.dt_grid.size();
            const std::size_t it = rem % grid.dt_grid.size();
            cells[idx] = evaluate_sonds_cell(config, train, test,
                                             grid.gamma_grid[ig],
                                             grid.delta_grid[id],
                                             grid.dt_grid[it], washout);
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j + 1 < n_threads; ++j) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    std::stable_sort(cells.begin(), cells.end(),
                     [](const GridCell& a, const GridCell& b) {
                         if (a.failed() != b.failed()) return !a.failed();
                         return a.nmse_test < b.nmse_test;
                     });
    return cells;
}

}  // namespace memrc
