#include "memrc/waveform.hpp"

#include <cmath>

namespace memrc {

namespace {

std::size_t steps_for(double duration, double dt) {
    return static_cast<std::size_t>(std::llround(duration / dt));
}

}  // namespace

VoltageWaveform triangle_ramp(double rate, double v_max, double dt) {
    if (!(rate > 0.0) || !(v_max > 0.0))
        throw invalid_input("triangle_ramp: rate and v_max must be > 0");
    if (!(dt > 0.0)) throw invalid_input("triangle_ramp: dt must be > 0");
    const double half = v_max / rate;
    const std::size_t n_half = steps_for(half, dt);
    VoltageWaveform w;
    w.dt = dt;
    w.v.reserve(2 * n_half);
    for (std::size_t j = 0; j < n_half; ++j)
        w.v.push_back(rate * dt * static_cast<double>(j + 1));
    for (std::size_t j = 0; j < n_half; ++j)
        w.v.push_back(v_max - rate * dt * static_cast<double>(j + 1));
    return w;
}

VoltageWaveform triangle_period(double freq, double v_max, double dt) {
    if (!(freq > 0.0)) throw invalid_input("triangle_period: freq must be > 0");
    // One period = up-ramp then down-ramp, each covering v_max.
    return triangle_ramp(2.0 * v_max * freq, v_max, dt);
}

VoltageWaveform pulse_pair(double v_pulse, double v_off, double pw, double ipi,
                           double dt) {
    if (!(pw > 0.0) || !(ipi > 0.0))
        throw invalid_input("pulse_pair: pw and ipi must be > 0");
    if (!(dt > 0.0)) throw invalid_input("pulse_pair: dt must be > 0");
    const std::size_t n_pw = steps_for(pw, dt);
    const std::size_t n_gap = steps_for(ipi, dt);
    VoltageWaveform w;
    w.dt = dt;
    w.v.reserve(2 * n_pw + n_gap);
    w.v.insert(w.v.end(), n_pw, v_pulse);
    w.v.insert(w.v.end(), n_gap, v_off);
    w.v.insert(w.v.end(), n_pw, v_pulse);
    return w;
}

VoltageWaveform step_decay_waveform(double v_high,
                                    const std::vector<double>& v_lows,
                                    double hold_high, double hold_low,
                                    double dt) {
    if (!(hold_high > 0.0) || !(hold_low > 0.0))
        throw invalid_input("step_decay_waveform: holds must be > 0");
    if (!(dt > 0.0)) throw invalid_input("step_decay_waveform: dt must be > 0");
    const std::size_t n_high = steps_for(hold_high, dt);
    const std::size_t n_low = steps_for(hold_low, dt);
    VoltageWaveform w;
    w.dt = dt;
    w.v.insert(w.v.end(), n_high, v_high);
    for (double v_low : v_lows) {
        w.v.insert(w.v.end(), n_low, v_low);
        w.v.insert(w.v.end(), n_high, v_high);
    }
    return w;
}

}  // namespace memrc
