#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "memrc/errors.hpp"

namespace memrc {

// Uniformly sampled voltage-vs-time signal.  Sample j covers the interval
// [j*dt, (j+1)*dt); integrators hold v[j] constant over that interval.
struct VoltageWaveform {
    double dt = 1e-4;       // s, sample spacing (default 10 kHz)
    std::vector<double> v;  // V

    double duration() const { return dt * static_cast<double>(v.size()); }

    void validate() const {
        if (!std::isfinite(dt) || dt <= 0.0)
            throw invalid_input("waveform: dt must be > 0");
        for (double x : v)
            if (!std::isfinite(x))
                throw invalid_input("waveform: non-finite sample");
    }
};

// Triangular 0 -> v_max -> 0 ramp at a fixed |dv/dt|.
VoltageWaveform triangle_ramp(double rate, double v_max, double dt);

// One full triangular period 0 -> v_max -> 0 at the given frequency.
VoltageWaveform triangle_period(double freq, double v_max, double dt);

// Two square pulses of amplitude v_pulse on a baseline v_off: pulse, gap of
// ipi at v_off, pulse.
VoltageWaveform pulse_pair(double v_pulse, double v_off, double pw, double ipi,
                           double dt);

// v_high hold followed by alternating (v_low hold, v_high hold) segments,
// one per entry of v_lows.
VoltageWaveform step_decay_waveform(double v_high,
                                    const std::vector<double>& v_lows,
                                    double hold_high, double hold_low,
                                    double dt);

}  // namespace memrc
