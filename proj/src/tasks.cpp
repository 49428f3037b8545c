#include "memrc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "memrc/errors.hpp"

namespace memrc {

namespace {

// Template spike positions for one pattern of the given class.  The
// irregular class draws a fresh Poisson train each call; the others are
// fixed trains.  Spikes that would run past the window are dropped.
std::vector<double> template_spikes(NeuralClass cls, std::mt19937_64& rng) {
    const double t_end = kNeuralPatternDuration - kNeuralJitter;
    std::vector<double> spikes;
    switch (cls) {
        case NeuralClass::tonic:
            for (int k = 0; k < 20; ++k) spikes.push_back(0.010 + 0.031 * k);
            break;
        case NeuralClass::bursting:
            for (int b = 0; b < 5; ++b)
                for (int k = 0; k < 4; ++k)
                    spikes.push_back(0.010 + 0.120 * b + 0.006 * k);
            break;
        case NeuralClass::adapting: {
            double t = 0.010, isi = 0.010;
            for (int k = 0; k < 12; ++k) {
                spikes.push_back(t);
                t += isi;
                isi *= 1.35;
            }
            break;
        }
        case NeuralClass::irregular: {
            // Poisson train at 32 Hz, resampled until 10..30 spikes land in
            // the window.
            std::exponential_distribution<double> isi(32.0);
            for (;;) {
                spikes.clear();
                double t = isi(rng);
                while (t < t_end - kNeuralJitter) {
                    spikes.push_back(t);
                    t += isi(rng);
                }
                if (spikes.size() >= 10 && spikes.size() <= 30) break;
            }
            break;
        }
    }
    while (!spikes.empty() && spikes.back() > t_end) spikes.pop_back();
    return spikes;
}

}  // namespace

void EncodingParams::validate() const {
    if (!(dt_hold > 0.0)) throw invalid_input("encoding: dt_hold must be > 0");
    if (!(sample_rate > 0.0) || sample_rate * dt_hold < 1.0)
        throw invalid_input("encoding: need sample_rate * dt_hold >= 1");
    if (!std::isfinite(gamma) || !std::isfinite(delta))
        throw invalid_input("encoding: non-finite gamma/delta");
}

std::string to_string(NeuralClass c) {
    switch (c) {
        case NeuralClass::tonic: return "tonic";
        case NeuralClass::bursting: return "bursting";
        case NeuralClass::adapting: return "adapting";
        case NeuralClass::irregular: return "irregular";
    }
    return "?";
}

NeuralClass neural_class_from_string(const std::string& s) {
    if (s == "tonic") return NeuralClass::tonic;
    if (s == "bursting") return NeuralClass::bursting;
    if (s == "adapting") return NeuralClass::adapting;
    if (s == "irregular") return NeuralClass::irregular;
    throw invalid_input("unknown neural class '" + s + "'");
}

std::vector<double> sonds_target(const std::vector<double>& u) {
    std::vector<double> y(u.size());
    double y1 = 0.0, y2 = 0.0;  // y[k-1], y[k-2]
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (!std::isfinite(u[k]))
            throw invalid_input("sonds_target: non-finite input");
        y[k] = 0.4 * y1 + 0.4 * y1 * y2 + 0.6 * u[k] * u[k] * u[k] + 0.1;
        y2 = y1;
        y1 = y[k];
    }
    return y;
}

std::pair<SondsDataset, SondsDataset> gen_sonds(std::size_t n_train,
                                                std::size_t n_test,
                                                std::uint64_t seed) {
    if (n_train == 0 || n_test == 0)
        throw invalid_input("gen_sonds: counts must be > 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 0.5);
    SondsDataset train, test;
    train.seed = test.seed = seed;
    train.u.resize(n_train);
    test.u.resize(n_test);
    for (double& x : train.u) x = uni(rng);
    for (double& x : test.u) x = uni(rng);
    train.y = sonds_target(train.u);
    test.y = sonds_target(test.u);
    return {std::move(train), std::move(test)};
}

VoltageWaveform encode_hold(const std::vector<double>& u,
                            const EncodingParams& enc) {
    enc.validate();
    const std::size_t per_hold = static_cast<std::size_t>(
        std::llround(enc.dt_hold * enc.sample_rate));
    VoltageWaveform w;
    w.dt = 1.0 / enc.sample_rate;
    w.v.reserve(u.size() * per_hold);
    for (double uk : u) {
        if (!std::isfinite(uk)) throw invalid_input("encode_hold: non-finite u");
        w.v.insert(w.v.end(), per_hold, enc.gamma * uk + enc.delta);
    }
    return w;
}

std::vector<NeuralPattern> gen_neural_patterns(NeuralClass cls,
                                               std::size_t count,
                                               std::uint64_t seed) {
    if (count == 0) throw invalid_input("gen_neural_patterns: count must be > 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-kNeuralJitter, kNeuralJitter);
    std::vector<NeuralPattern> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        const std::vector<double> tmpl = template_spikes(cls, rng);
        NeuralPattern p;
        p.class_label = cls;
        p.seed = seed;
        for (;;) {  // resample jitters until the train stays ordered
            p.spike_times.clear();
            for (double t : tmpl) p.spike_times.push_back(t + jitter(rng));
            bool ok = true;
            for (std::size_t j = 0; j < p.spike_times.size(); ++j) {
                if (p.spike_times[j] < 0.0 ||
                    p.spike_times[j] > kNeuralPatternDuration ||
                    (j > 0 && p.spike_times[j] <= p.spike_times[j - 1] + 2e-4))
                    ok = false;
            }
            if (ok) break;
        }
        out.push_back(std::move(p));
    }
    return out;
}

VoltageWaveform render_neural_waveform(const NeuralPattern& pattern,
                                       double scale, double offset,
                                       double sample_rate) {
    if (!(sample_rate >= 1e3))
        throw invalid_input("render_neural_waveform: sample_rate must be >= 1 kHz");
    const std::size_t n = static_cast<std::size_t>(
        std::llround(kNeuralPatternDuration * sample_rate));
    VoltageWaveform w;
    w.dt = 1.0 / sample_rate;

    // Stereotyped action potential as deviation from rest: rise to +40 mV in
    // 1 ms, overshoot to -80 mV by 2.5 ms, recover to rest by 4 ms.
    auto ap_deviation = [](double tau) -> double {
        if (tau < 0.0 || tau >= 4e-3) return 0.0;
        if (tau < 1e-3) return 0.110 * (tau / 1e-3);
        if (tau < 2.5e-3) return 0.110 - 0.120 * ((tau - 1e-3) / 1.5e-3);
        return -0.010 + 0.010 * ((tau - 2.5e-3) / 1.5e-3);
    };

    w.v.resize(n, kRestPotential);
    for (double spike : pattern.spike_times) {
        const std::size_t j0 = static_cast<std::size_t>(
            std::max(0.0, std::ceil(spike * sample_rate)));
        for (std::size_t j = j0; j < n; ++j) {
            const double tau = static_cast<double>(j) / sample_rate - spike;
            if (tau >= 4e-3) break;
            w.v[j] += ap_deviation(tau);
        }
    }
    // Amplify the deviation from rest and sit the result on the DC bias, so
    // an empty pattern rests exactly at `offset` (the -70..+40 mV biological
    // range maps to offset..offset + 110*scale mV).
    for (double& v : w.v) v = scale * (v - kRestPotential) + offset;
    return w;
}

NeuralDatasetSplit split_neural_dataset(
    const std::map<NeuralClass, std::vector<NeuralPattern>>& per_class,
    std::size_t train_per_class, std::uint64_t seed) {
    NeuralDatasetSplit split;
    std::mt19937_64 rng(seed);
    for (const auto& [cls, patterns] : per_class) {
        if (patterns.size() <= train_per_class)
            throw invalid_input("split_neural_dataset: class '" +
                                to_string(cls) + "' has too few patterns");
        std::vector<std::size_t> order(patterns.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t j = 0; j < order.size(); ++j) {
            auto& dest = j < train_per_class ? split.train : split.test;
            dest.push_back(patterns[order[j]]);
        }
    }
    std::shuffle(split.train.begin(), split.train.end(), rng);
    std::shuffle(split.test.begin(), split.test.end(), rng);
    return split;
}

}  // namespace memrc
