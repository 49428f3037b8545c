#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "memrc/device.hpp"
#include "memrc/tasks.hpp"
#include "memrc/waveform.hpp"

namespace memrc {

struct IntegrationSpec {
    IntegrationMethod method = IntegrationMethod::rk4;
    double dt = 1e-4;  // s
};

// A bank of devices driven by one shared waveform.  per_device_offset, when
// non-empty, is added to the shared waveform per device.
struct ReservoirConfig {
    std::vector<DeviceParams> devices;
    std::vector<double> per_device_offset;  // V; empty means all zeros
    IntegrationSpec integration;
    NoiseSpec noise;

    std::size_t size() const { return devices.size(); }
    double offset(std::size_t d) const {
        return per_device_offset.empty() ? 0.0 : per_device_offset[d];
    }
    void validate() const;
};

// Reservoir features, row-major.  Columns are device-major: column
// d*nodes + j is node j of device d.
struct StateMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::string> col_names;
    bool normalized = false;

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::vector<double> row(std::size_t r) const {
        return {values.begin() + r * cols, values.begin() + (r + 1) * cols};
    }
};

// Per-pattern feature block: m devices x n virtual nodes, device-major.
struct FeatureBlock {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<double> values;

    double& at(std::size_t d, std::size_t j) { return values[d * n + j]; }
    double at(std::size_t d, std::size_t j) const { return values[d * n + j]; }
};

// Integrate every device (offset-shifted, starting at its offset
// equilibrium) through the waveform and record conductance at each sample
// time.  Rows = sample times, cols = devices.
StateMatrix drive(const ReservoirConfig& config, const VoltageWaveform& waveform,
                  const std::vector<double>& sample_times);
StateMatrix drive(const ReservoirConfig& config, const VoltageWaveform& waveform,
                  const std::vector<double>& sample_times, NoiseStream& noise);

// Encode, drive, sample at the end of each held interval, drop the washout
// rows.  Returns the state matrix and the aligned targets.
struct SondsRun {
    StateMatrix states;
    std::vector<double> targets;
};
SondsRun run_sonds(const ReservoirConfig& config, const SondsDataset& dataset,
                   const EncodingParams& enc, std::size_t washout = 50);

// Render each pattern per device offset (affine map scale*v + offset),
// drive from a per-pattern reset, sample n equally spaced virtual nodes
// over the window.  One (m, n) block per pattern.
std::vector<FeatureBlock> run_neural(const ReservoirConfig& config,
                                     const std::vector<NeuralPattern>& patterns,
                                     double scale,
                                     const std::vector<double>& offsets,
                                     std::size_t nodes_per_pattern);

// Stack per-pattern blocks into a (patterns, m*n) matrix.
StateMatrix flatten_blocks(const std::vector<FeatureBlock>& blocks);

enum class NormMode { none, zscore, per_device_max };

NormMode norm_mode_from_string(const std::string& s);
std::string to_string(NormMode mode);

// Train-fitted normalization, reusable on test data.
struct Normalizer {
    NormMode mode = NormMode::none;
    std::vector<double> shift;    // per column
    std::vector<double> scale;    // per column
    std::vector<std::size_t> degenerate_cols;  // zero variance / all-zero

    static Normalizer fit(const StateMatrix& train, NormMode mode,
                          std::size_t cols_per_device = 0);
    StateMatrix apply(const StateMatrix& matrix) const;
};

// Convenience: fit on the matrix itself and apply.
StateMatrix normalize_features(const StateMatrix& matrix, NormMode mode,
                               std::size_t cols_per_device = 0);

}  // namespace memrc
