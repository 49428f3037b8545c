#include "memrc/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memrc/errors.hpp"

namespace memrc {

namespace {

// Integrate one device through a waveform, evaluating conductance after the
// steps listed in sample_steps (1-based step counts, ascending).  Steady
// voltage between samples shares one (nss, tau) evaluation.
std::vector<double> integrate_and_sample(const DeviceParams& p,
                                         const VoltageWaveform& w,
                                         double v_offset,
                                         MemristorState state,
                                         IntegrationMethod method,
                                         const std::vector<std::size_t>& sample_steps,
                                         std::vector<double>* sample_voltages) {
    std::vector<double> out;
    out.reserve(sample_steps.size());
    std::size_t next = 0;
    double last_v = std::numeric_limits<double>::quiet_NaN();
    double nss = 0.0, tau = 1.0;
    const double dt = w.dt;
    for (std::size_t j = 0; j < w.v.size() && next < sample_steps.size(); ++j) {
        const double v = w.v[j] + v_offset;
        if (v != last_v) {
            if (!std::isfinite(v))
                throw invalid_input("drive: non-finite voltage sample");
            nss = steady_state_pores(p, v);
            tau = time_constant(p, v);
            last_v = v;
        }
        if (method == IntegrationMethod::euler) {
            state.na += dt * (nss - state.na) / tau;
        } else if (dt > 2.5 * tau) {
            // outside rk4's stability region; v is constant over the step,
            // so fall back to the exact relaxation (see device step())
            state.na = nss + (state.na - nss) * std::exp(-dt / tau);
        } else {
            const double k1 = (nss - state.na) / tau;
            const double k2 = (nss - (state.na + 0.5 * dt * k1)) / tau;
            const double k3 = (nss - (state.na + 0.5 * dt * k2)) / tau;
            const double k4 = (nss - (state.na + dt * k3)) / tau;
            state.na += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (state.na < 0.0) state.na = 0.0;
        if (j + 1 == sample_steps[next]) {
            out.push_back(conductance(p, state));
            if (sample_voltages) sample_voltages->push_back(v);
            ++next;
        }
    }
    if (next != sample_steps.size())
        throw invalid_input("drive: sample time beyond waveform duration");
    return out;
}

std::vector<std::size_t> sample_steps_for_times(
    const std::vector<double>& sample_times, double dt, std::size_t n_steps) {
    std::vector<std::size_t> steps;
    steps.reserve(sample_times.size());
    double prev = -1.0;
    for (double t : sample_times) {
        if (!(t > prev))
            throw invalid_input("drive: sample times must be strictly increasing");
        prev = t;
        const auto k = static_cast<std::size_t>(std::llround(t / dt));
        if (k < 1 || k > n_steps)
            throw invalid_input("drive: sample time beyond waveform duration");
        steps.push_back(k);
    }
    return steps;
}

}  // namespace

void ReservoirConfig::validate() const {
    if (devices.empty())
        throw invalid_input("reservoir: need at least one device");
    for (const DeviceParams& p : devices) p.validate();
    if (!per_device_offset.empty() && per_device_offset.size() != devices.size())
        throw invalid_input("reservoir: per_device_offset length mismatch");
    if (!(integration.dt > 0.0))
        throw invalid_input("reservoir: integration dt must be > 0");
    if (noise.current_rms < 0.0)
        throw invalid_input("reservoir: noise rms must be >= 0");
}

StateMatrix drive(const ReservoirConfig& config, const VoltageWaveform& waveform,
                  const std::vector<double>& sample_times) {
    NoiseStream noise(config.noise);
    return drive(config, waveform, sample_times, noise);
}

StateMatrix drive(const ReservoirConfig& config, const VoltageWaveform& waveform,
                  const std::vector<double>& sample_times, NoiseStream& noise) {
    config.validate();
    waveform.validate();
    const auto steps =
        sample_steps_for_times(sample_times, waveform.dt, waveform.v.size());

    StateMatrix out;
    out.rows = sample_times.size();
    out.cols = config.size();
    out.values.assign(out.rows * out.cols, 0.0);
    for (std::size_t d = 0; d < config.size(); ++d) {
        const double off = config.offset(d);
        std::vector<double> sample_v;
        const std::vector<double> g = integrate_and_sample(
            config.devices[d], waveform, off,
            equilibrium_state(config.devices[d], off),
            config.integration.method, steps, &sample_v);
        for (std::size_t r = 0; r < out.rows; ++r) {
            double value = g[r];
            if (config.noise.current_rms > 0.0) {
                // observation noise enters as current noise at the sampled
                // instant, referred back to conductance
                double v = sample_v[r];
                if (std::abs(v) < 1e-6) v = v < 0.0 ? -1e-6 : 1e-6;
                value += noise.draw() / v;
            }
            out.at(r, d) = value;
        }
        out.col_names.push_back("dev" + config.devices[d].label + "_n0");
    }
    return out;
}

SondsRun run_sonds(const ReservoirConfig& config, const SondsDataset& dataset,
                   const EncodingParams& enc, std::size_t washout) {
    config.validate();
    enc.validate();
    if (washout >= dataset.u.size())
        throw invalid_input("run_sonds: washout must be < input length");
    const VoltageWaveform w = encode_hold(dataset.u, enc);
    const std::size_t per_hold = static_cast<std::size_t>(
        std::llround(enc.dt_hold * enc.sample_rate));
    std::vector<double> sample_times(dataset.u.size());
    for (std::size_t k = 0; k < sample_times.size(); ++k)
        sample_times[k] = static_cast<double>((k + 1) * per_hold) * w.dt;

    ReservoirConfig cfg = config;
    cfg.integration.dt = w.dt;
    const StateMatrix full = drive(cfg, w, sample_times);

    SondsRun run;
    run.states.rows = full.rows - washout;
    run.states.cols = full.cols;
    run.states.col_names = full.col_names;
    run.states.values.assign(full.values.begin() + washout * full.cols,
                             full.values.end());
    run.targets.assign(dataset.y.begin() + washout, dataset.y.end());
    return run;
}

std::vector<FeatureBlock> run_neural(const ReservoirConfig& config,
                                     const std::vector<NeuralPattern>& patterns,
                                     double scale,
                                     const std::vector<double>& offsets,
                                     std::size_t nodes_per_pattern) {
    config.validate();
    if (offsets.size() != config.size())
        throw invalid_input("run_neural: one offset per device required");
    if (nodes_per_pattern < 1)
        throw invalid_input("run_neural: nodes_per_pattern must be >= 1");

    const double sample_rate = 1.0 / config.integration.dt;
    const std::size_t n_steps = static_cast<std::size_t>(
        std::llround(kNeuralPatternDuration * sample_rate));
    // virtual node j sits at time (j+1) * duration / n
    std::vector<std::size_t> node_steps(nodes_per_pattern);
    for (std::size_t j = 0; j < nodes_per_pattern; ++j)
        node_steps[j] = static_cast<std::size_t>(std::llround(
            static_cast<double>((j + 1) * n_steps) /
            static_cast<double>(nodes_per_pattern)));

    NoiseStream noise(config.noise);
    std::vector<FeatureBlock> out;
    out.reserve(patterns.size());
    for (const NeuralPattern& pattern : patterns) {
        FeatureBlock block;
        block.m = config.size();
        block.n = nodes_per_pattern;
        block.values.reserve(block.m * block.n);
        for (std::size_t d = 0; d < config.size(); ++d) {
            const VoltageWaveform w = render_neural_waveform(
                pattern, scale, offsets[d], sample_rate);
            // reset to the rest-level equilibrium of this device's encoding
            const double baseline = offsets[d];
            std::vector<double> sample_v;
            std::vector<double> g = integrate_and_sample(
                config.devices[d], w, 0.0,
                equilibrium_state(config.devices[d], baseline),
                config.integration.method, node_steps, &sample_v);
            if (config.noise.current_rms > 0.0) {
                for (std::size_t j = 0; j < g.size(); ++j) {
                    double v = sample_v[j];
                    if (std::abs(v) < 1e-6) v = v < 0.0 ? -1e-6 : 1e-6;
                    g[j] += noise.draw() / v;
                }
            }
            block.values.insert(block.values.end(), g.begin(), g.end());
        }
        out.push_back(std::move(block));
    }
    return out;
}

StateMatrix flatten_blocks(const std::vector<FeatureBlock>& blocks) {
    StateMatrix out;
    if (blocks.empty()) return out;
    out.rows = blocks.size();
    out.cols = blocks.front().m * blocks.front().n;
    out.values.reserve(out.rows * out.cols);
    for (const FeatureBlock& b : blocks) {
        if (b.values.size() != out.cols)
            throw invalid_input("flatten_blocks: inconsistent block shapes");
        out.values.insert(out.values.end(), b.values.begin(), b.values.end());
    }
    for (std::size_t d = 0; d < blocks.front().m; ++d)
        for (std::size_t j = 0; j < blocks.front().n; ++j)
            out.col_names.push_back("dev" + std::to_string(d) + "_n" +
                                    std::to_string(j));
    return out;
}

NormMode norm_mode_from_string(const std::string& s) {
    if (s == "none") return NormMode::none;
    if (s == "zscore") return NormMode::zscore;
    if (s == "per-device-max") return NormMode::per_device_max;
    throw invalid_input("unknown normalization mode '" + s + "'");
}

std::string to_string(NormMode mode) {
    switch (mode) {
        case NormMode::none: return "none";
        case NormMode::zscore: return "zscore";
        case NormMode::per_device_max: return "per-device-max";
    }
    return "?";
}

Normalizer Normalizer::fit(const StateMatrix& train, NormMode mode,
                           std::size_t cols_per_device) {
    Normalizer norm;
    norm.mode = mode;
    if (mode == NormMode::none) return norm;
    if (mode == NormMode::zscore && train.rows < 2)
        throw invalid_input("normalizer: z-score needs >= 2 rows");
    norm.shift.assign(train.cols, 0.0);
    norm.scale.assign(train.cols, 1.0);
    if (mode == NormMode::zscore) {
        // cols_per_device > 0 pools the statistics across each device's node
        // group, which keeps the spatial profile undistorted for readouts
        // that slide over adjacent nodes
        const std::size_t group =
            cols_per_device > 0 ? cols_per_device : 1;
        for (std::size_t c0 = 0; c0 < train.cols; c0 += group) {
            const std::size_t c1 = std::min(train.cols, c0 + group);
            const double count =
                static_cast<double>(train.rows * (c1 - c0));
            double mean = 0.0;
            for (std::size_t c = c0; c < c1; ++c)
                for (std::size_t r = 0; r < train.rows; ++r)
                    mean += train.at(r, c);
            mean /= count;
            double var = 0.0;
            for (std::size_t c = c0; c < c1; ++c)
                for (std::size_t r = 0; r < train.rows; ++r) {
                    const double d = train.at(r, c) - mean;
                    var += d * d;
                }
            var /= count;
            for (std::size_t c = c0; c < c1; ++c) {
                norm.shift[c] = mean;
                if (var > 0.0) {
                    norm.scale[c] = std::sqrt(var);
                } else {
                    norm.scale[c] = 1.0;  // group left centered at 0
                    norm.degenerate_cols.push_back(c);
                }
            }
        }
    } else {  // per-device max
        const std::size_t group =
            cols_per_device > 0 ? cols_per_device : train.cols;
        for (std::size_t c0 = 0; c0 < train.cols; c0 += group) {
            double peak = 0.0;
            const std::size_t c1 = std::min(train.cols, c0 + group);
            for (std::size_t c = c0; c < c1; ++c)
                for (std::size_t r = 0; r < train.rows; ++r)
                    peak = std::max(peak, std::abs(train.at(r, c)));
            for (std::size_t c = c0; c < c1; ++c) {
                if (peak > 0.0) {
                    norm.scale[c] = peak;
                } else {
                    norm.scale[c] = 1.0;
                    norm.degenerate_cols.push_back(c);
                }
            }
        }
    }
    return norm;
}

StateMatrix Normalizer::apply(const StateMatrix& matrix) const {
    if (mode == NormMode::none) return matrix;
    if (matrix.cols != scale.size())
        throw invalid_input("normalizer: column count mismatch");
    StateMatrix out = matrix;
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
            out.at(r, c) = (out.at(r, c) - shift[c]) / scale[c];
    out.normalized = true;
    return out;
}

StateMatrix normalize_features(const StateMatrix& matrix, NormMode mode,
                               std::size_t cols_per_device) {
    return Normalizer::fit(matrix, mode, cols_per_device).apply(matrix);
}

}  // namespace memrc
