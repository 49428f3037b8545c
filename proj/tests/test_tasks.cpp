#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <doctest.h>

#include "memrc/errors.hpp"
#include "memrc/tasks.hpp"

using namespace memrc;

TEST_CASE("recurrence targets") {
    CHECK(sonds_target({0.0}) == std::vector<double>{0.1});

    // zero input converges to the fixed point of 0.4y^2 - 0.6y + 0.1 = 0
    std::vector<double> zeros(200, 0.0);
    const std::vector<double> y = sonds_target(zeros);
    const double fixed_point = (0.6 - std::sqrt(0.36 - 0.16)) / 0.8;
    CHECK(y.back() == doctest::Approx(fixed_point).epsilon(1e-10));
    CHECK(fixed_point == doctest::Approx(0.19098).epsilon(1e-4));

    // constant u = 0.5 fixed point: y = 0.4y + 0.4y^2 + 0.175
    std::vector<double> halves(200, 0.5);
    const double yh = sonds_target(halves).back();
    CHECK(yh == doctest::Approx(0.4 * yh + 0.4 * yh * yh + 0.6 * 0.125 + 0.1)
                    .epsilon(1e-10));

    // streamed computation equals recomputation from scratch at any prefix
    auto [train, test] = gen_sonds(100, 10, 5);
    const std::vector<double> full = sonds_target(train.u);
    for (std::size_t cut : {std::size_t{1}, std::size_t{37}, std::size_t{100}}) {
        const std::vector<double> prefix = sonds_target(
            std::vector<double>(train.u.begin(), train.u.begin() + cut));
        for (std::size_t k = 0; k < cut; ++k) CHECK(prefix[k] == full[k]);
    }
    CHECK(train.y == full);
}

TEST_CASE("dataset generation") {
    auto [a_train, a_test] = gen_sonds(300, 300, 123);
    auto [b_train, b_test] = gen_sonds(300, 300, 123);
    CHECK(a_train.u == b_train.u);
    CHECK(a_test.u == b_test.u);

    auto [c_train, c_test] = gen_sonds(300, 300, 124);
    CHECK(a_train.u != c_train.u);
    CHECK(a_train.u != a_test.u);  // train and test are independent draws

    double mean = 0.0;
    for (double u : a_train.u) {
        CHECK(u >= 0.0);
        CHECK(u <= 0.5);
        mean += u;
    }
    mean /= static_cast<double>(a_train.u.size());
    CHECK(mean == doctest::Approx(0.25).epsilon(0.2));
    CHECK(std::abs(mean - 0.25) < 0.05);
}

TEST_CASE("hold encoding") {
    EncodingParams enc;  // 160 mV, 90 mV, 3 ms, 10 kHz
    const VoltageWaveform w = encode_hold({0.0, 0.5}, enc);
    REQUIRE(w.v.size() == 60);  // 2 points x 3 ms x 10 kHz
    CHECK(w.v.front() == doctest::Approx(0.090));
    CHECK(w.v[29] == doctest::Approx(0.090));
    CHECK(w.v[30] == doctest::Approx(0.170));
    CHECK(w.v.back() == doctest::Approx(0.170));

    // affine in the encoding constants
    EncodingParams unit;
    unit.gamma = 1.0;
    unit.delta = 0.0;
    const std::vector<double> u = {0.1, 0.4, 0.25};
    const VoltageWaveform base = encode_hold(u, unit);
    const VoltageWaveform scaled = encode_hold(u, enc);
    REQUIRE(base.v.size() == scaled.v.size());
    for (std::size_t k = 0; k < base.v.size(); ++k)
        CHECK(scaled.v[k] == doctest::Approx(enc.gamma * base.v[k] + enc.delta));

    EncodingParams bad;
    bad.dt_hold = 0.0;
    CHECK_THROWS_AS(bad.validate(), invalid_input);
    bad = EncodingParams{};
    bad.sample_rate = 100.0;
    bad.dt_hold = 1e-3;  // under one sample per held value
    CHECK_THROWS_AS(bad.validate(), invalid_input);
}

TEST_CASE("neural pattern generation") {
    for (int c = 0; c < 4; ++c) {
        const auto cls = static_cast<NeuralClass>(c);
        const auto patterns = gen_neural_patterns(cls, 50, 21);
        REQUIRE(patterns.size() == 50);
        const auto again = gen_neural_patterns(cls, 50, 21);
        for (std::size_t k = 0; k < patterns.size(); ++k) {
            CHECK(patterns[k].spike_times == again[k].spike_times);
            CHECK(patterns[k].class_label == cls);
            double prev = -1.0;
            for (double t : patterns[k].spike_times) {
                CHECK(t >= 0.0);
                CHECK(t <= kNeuralPatternDuration);
                CHECK(t > prev);
                prev = t;
            }
        }
    }

    // class-template statistics differ by construction
    const auto tonic = gen_neural_patterns(NeuralClass::tonic, 20, 3);
    const auto bursting = gen_neural_patterns(NeuralClass::bursting, 20, 3);
    const auto adapting = gen_neural_patterns(NeuralClass::adapting, 20, 3);
    const auto irregular = gen_neural_patterns(NeuralClass::irregular, 20, 3);
    for (const auto& p : tonic) CHECK(p.spike_times.size() == 20);
    for (const auto& p : bursting) CHECK(p.spike_times.size() == 20);
    for (const auto& p : irregular) {
        CHECK(p.spike_times.size() >= 10);
        CHECK(p.spike_times.size() <= 30);
    }
    // the adapting ISI chain outgrows the window before its 12th spike
    for (const auto& p : adapting) CHECK(p.spike_times.size() == 11);

    // jitter stays within +-4 ms of the evenly spaced tonic template
    for (const auto& p : tonic)
        for (std::size_t k = 0; k < p.spike_times.size(); ++k) {
            const double nominal = 0.010 + 0.031 * static_cast<double>(k);
            CHECK(std::abs(p.spike_times[k] - nominal) <= kNeuralJitter + 1e-12);
        }

    // ISI dispersion separates tonic from irregular
    auto isi_cv = [](const std::vector<NeuralPattern>& ps) {
        double mean = 0.0, var = 0.0;
        std::size_t n = 0;
        for (const auto& p : ps)
            for (std::size_t k = 1; k < p.spike_times.size(); ++k) {
                mean += p.spike_times[k] - p.spike_times[k - 1];
                ++n;
            }
        mean /= static_cast<double>(n);
        for (const auto& p : ps)
            for (std::size_t k = 1; k < p.spike_times.size(); ++k) {
                const double d = p.spike_times[k] - p.spike_times[k - 1] - mean;
                var += d * d;
            }
        return std::sqrt(var / static_cast<double>(n)) / mean;
    };
    CHECK(isi_cv(irregular) > 3.0 * isi_cv(tonic));
}

TEST_CASE("waveform rendering") {
    NeuralPattern empty;
    empty.class_label = NeuralClass::tonic;
    const VoltageWaveform rest = render_neural_waveform(empty, 1.8, 0.090, 1e4);
    REQUIRE(rest.v.size() == 6200);
    // the amplifier scales the deviation from rest; an empty pattern sits at
    // the DC bias itself
    for (double v : rest.v) CHECK(v == doctest::Approx(0.090));

    NeuralPattern one;
    one.class_label = NeuralClass::tonic;
    one.spike_times = {0.1, 0.3};
    const VoltageWaveform w = render_neural_waveform(one, 1.8, 0.090, 1e4);
    const double baseline = 0.090;
    const double peak = *std::max_element(w.v.begin(), w.v.end());
    // the -70 -> +40 mV excursion is a +110 mV deviation from rest
    CHECK(peak == doctest::Approx(1.8 * 0.110 + 0.090).epsilon(1e-6));
    const double trough = *std::min_element(w.v.begin(), w.v.end());
    // the -80 mV overshoot is a -10 mV deviation from rest
    CHECK(trough == doctest::Approx(0.090 - 1.8 * 0.010).epsilon(1e-6));
    CHECK(w.v.front() == doctest::Approx(baseline));

    // timing preservation: peaks sit scale-independently at the spike times
    auto peak_indices = [](const VoltageWaveform& wf) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 1; k + 1 < wf.v.size(); ++k)
            if (wf.v[k] > wf.v[k - 1] && wf.v[k] >= wf.v[k + 1] &&
                wf.v[k] > wf.v.front() + 0.05)
                idx.push_back(k);
        return idx;
    };
    const VoltageWaveform w2 = render_neural_waveform(one, 0.9, 0.030, 1e4);
    CHECK(peak_indices(w).size() == 2);
    CHECK(peak_indices(w) == peak_indices(w2));

    CHECK_THROWS_AS(render_neural_waveform(one, 1.8, 0.090, 500.0), invalid_input);
}

TEST_CASE("stratified split") {
    std::map<NeuralClass, std::vector<NeuralPattern>> per_class;
    for (int c = 0; c < 4; ++c) {
        const auto cls = static_cast<NeuralClass>(c);
        per_class[cls] = gen_neural_patterns(cls, 100, 31 + c);
    }
    const NeuralDatasetSplit split = split_neural_dataset(per_class, 80, 7);
    REQUIRE(split.train.size() == 320);
    REQUIRE(split.test.size() == 80);

    std::map<NeuralClass, int> train_counts, test_counts;
    for (const auto& p : split.train) ++train_counts[p.class_label];
    for (const auto& p : split.test) ++test_counts[p.class_label];
    for (int c = 0; c < 4; ++c) {
        CHECK(train_counts[static_cast<NeuralClass>(c)] == 80);
        CHECK(test_counts[static_cast<NeuralClass>(c)] == 20);
    }

    // disjoint: identify patterns by their spike-time vectors
    std::set<std::vector<double>> train_set;
    for (const auto& p : split.train) train_set.insert(p.spike_times);
    for (const auto& p : split.test)
        CHECK(train_set.count(p.spike_times) == 0);

    // deterministic given the seed, shuffled relative to generation order
    const NeuralDatasetSplit again = split_neural_dataset(per_class, 80, 7);
    REQUIRE(again.train.size() == split.train.size());
    for (std::size_t k = 0; k < split.train.size(); ++k)
        CHECK(split.train[k].spike_times == again.train[k].spike_times);
    bool shuffled = false;
    for (std::size_t k = 1; k < split.train.size(); ++k)
        if (split.train[k].class_label != split.train[k - 1].class_label)
            shuffled = true;
    CHECK(shuffled);
}

TEST_CASE("class labels round trip as lowercase strings") {
    for (int c = 0; c < 4; ++c) {
        const auto cls = static_cast<NeuralClass>(c);
        const std::string s = to_string(cls);
        CHECK(std::all_of(s.begin(), s.end(),
                          [](char ch) { return std::islower(ch) != 0; }));
        CHECK(neural_class_from_string(s) == cls);
    }
    CHECK_THROWS_AS(neural_class_from_string("spiky"), invalid_input);
}
