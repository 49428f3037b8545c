#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "memrc/waveform.hpp"

namespace memrc {

// Input/target pair for the second-order prediction benchmark.
struct SondsDataset {
    std::vector<double> u;  // in [0, 0.5]
    std::vector<double> y;  // recurrence targets
    std::uint64_t seed = 0;
};

// Scale-and-offset hold encoding of a discrete sequence into voltage.
struct EncodingParams {
    double gamma = 0.160;       // V per unit input
    double delta = 0.090;       // V offset
    double dt_hold = 3e-3;      // s held per input point
    double sample_rate = 1e4;   // Hz

    void validate() const;
};

enum class NeuralClass { tonic, bursting, adapting, irregular };

std::string to_string(NeuralClass c);
NeuralClass neural_class_from_string(const std::string& s);

// One emulated 0.62 s activity pattern: jittered spike times on a class
// template.
struct NeuralPattern {
    NeuralClass class_label;
    std::vector<double> spike_times;  // s, strictly increasing in [0, 0.62]
    std::uint64_t seed = 0;
};

inline constexpr double kNeuralPatternDuration = 0.62;  // s
inline constexpr double kNeuralJitter = 4e-3;           // s, max |spike - template|
inline constexpr double kRestPotential = -0.070;        // V, baseline before biasing

// y[k] = 0.4 y[k-1] + 0.4 y[k-1] y[k-2] + 0.6 u^3[k] + 0.1, zero history.
std::vector<double> sonds_target(const std::vector<double>& u);

// Two independent uniform-[0, 0.5] sequences with targets.
std::pair<SondsDataset, SondsDataset> gen_sonds(std::size_t n_train = 300,
                                                std::size_t n_test = 300,
                                                std::uint64_t seed = 0);

// Hold encoding: v = gamma*u[k] + delta held for dt_hold per point.
VoltageWaveform encode_hold(const std::vector<double>& u,
                            const EncodingParams& enc);

// Class-template spike trains with independent per-spike jitter.
std::vector<NeuralPattern> gen_neural_patterns(NeuralClass cls,
                                               std::size_t count,
                                               std::uint64_t seed);

// Render a pattern as a voltage waveform: action-potential template at each
// spike over a -70 mV baseline, overlaps summed on the deviation from rest,
// then v -> scale*v + offset.
VoltageWaveform render_neural_waveform(const NeuralPattern& pattern,
                                       double scale, double offset,
                                       double sample_rate = 1e4);

struct NeuralDatasetSplit {
    std::vector<NeuralPattern> train;
    std::vector<NeuralPattern> test;
};

// Stratified shuffled split; with the defaults (400 per class, 320 train)
// this yields the standard 1280/320 partition.
NeuralDatasetSplit split_neural_dataset(
    const std::map<NeuralClass, std::vector<NeuralPattern>>& per_class,
    std::size_t train_per_class = 320, std::uint64_t seed = 0);

}  // namespace memrc
