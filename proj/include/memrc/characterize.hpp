#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "memrc/device.hpp"
#include "memrc/waveform.hpp"

namespace memrc {

// Aligned time/voltage/current arrays from one simulated (or measured) run.
struct IvTrace {
    std::vector<double> t;  // s, strictly increasing
    std::vector<double> v;  // V
    std::vector<double> i;  // A

    void validate() const;
};

// Result of one log-linear exponential-decay fit g(t) = g0 * exp(-t/tau).
struct DecayFit {
    double g0;        // S
    double tau;       // s
    double residual;  // RMS of the log-domain fit
};

struct PpfResult {
    double peak_a;       // A, first-pulse peak
    double peak_b;       // A, second-pulse peak
    double ppf_percent;  // (B - A) / A * 100
};

struct SteadyStateFit {
    double n0;        // pores/m^2
    double ve;        // V
    double residual;  // RMS of the log-domain fit
};

struct TauVoltageFit {
    double tau01, vtau1;  // sub-threshold branch
    double tau02, vtau2;  // supra-threshold branch
    double residual_sub, residual_supra;
};

// Integrate one device through a waveform from a given start state and
// record the noiseless I-V trace.  Observation noise, when wanted, is added
// by the caller on top of the returned currents.
IvTrace simulate_waveform(const DeviceParams& p, const VoltageWaveform& w,
                          MemristorState start,
                          IntegrationMethod method = IntegrationMethod::rk4);

// Quasi-steady triangular sweep 0 -> v_max -> 0 at |dv/dt| = rate.
// Defaults follow the characterization protocol: 2 mV/s, 170 mV, 0.1 ms.
IvTrace simulate_sweep(const DeviceParams& p, double rate = 2e-3,
                       double v_max = 0.170, double dt = 1e-4);

// One full triangular period at the given frequency (fast enough sweeps
// open a pinched hysteresis loop).
IvTrace simulate_hysteresis(const DeviceParams& p, double freq = 0.2,
                            double v_max = 0.170, double dt = 1e-4);

// Paired-pulse facilitation: two pulses of amplitude v_pulse separated by a
// gap of ipi at v_off, starting from rest at v_off.
PpfResult ppf(const DeviceParams& p, double v_pulse, double v_off, double pw,
              double ipi, double dt = 1e-4);

// PPF over a (pw, ipi) grid; result[a][b] is the pw_grid[a], ipi_grid[b] cell.
std::vector<std::vector<double>> ppf_surface(const DeviceParams& p,
                                             const std::vector<double>& pw_grid,
                                             const std::vector<double>& ipi_grid,
                                             double v_pulse = 0.170,
                                             double v_off = 0.0,
                                             double dt = 1e-4);

// Stepwise decay protocol: hold v_high, drop to each v_low in turn, return
// to v_high between drops.  Defaults 500 ms / 300 ms.
IvTrace simulate_step_decay(const DeviceParams& p, double v_high,
                            const std::vector<double>& v_lows,
                            double hold_high = 0.5, double hold_low = 0.3,
                            double dt = 1e-4);

// Log-linear least squares of ln g against t.  Rejects non-positive g;
// a constant segment is a fit error.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& g);

// Log-linear fit of the steady-state pore law from (v, n_ss) points.
SteadyStateFit fit_steady_state(
    const std::vector<std::pair<double, double>>& points);

// Two independent log-linear fits of tau(v), split at vt (v < vt is the
// sub-threshold branch).  Needs >= 2 points per branch.
TauVoltageFit fit_tau_voltage(
    const std::vector<std::pair<double, double>>& points, double vt);

// Knee estimate for the tau(v) branch split: the candidate split point that
// minimises the combined two-branch log-fit residual.
double estimate_vt(const std::vector<std::pair<double, double>>& points);

// g_scale such that steady-state current at v_high equals target_current.
double calibrate_scale(const DeviceParams& p, double v_high,
                       double target_current = 190e-9);

// --- full trace -> parameters pipeline -------------------------------------

struct StepDecayProtocol {
    double v_high;
    std::vector<double> v_lows;
    double hold_high = 0.5;
    double hold_low = 0.3;
};

struct DeviceFitReport {
    DeviceParams params;
    double ss_residual;
    double tau_residual_sub;
    double tau_residual_supra;
    // tau extracted per v_low, for inspection/export
    std::vector<std::pair<double, double>> tau_points;
};

// Recover all seven model constants from a quasi-steady sweep trace plus a
// step-decay trace.  g_scale converts measured conductance to pore density
// and is carried through to the result.  vt_hint < 0 means estimate the
// split from the tau points.
DeviceFitReport fit_device_model(const IvTrace& sweep, const IvTrace& decay,
                                 const StepDecayProtocol& proto, double g_scale,
                                 double vt_hint = -1.0,
                                 double noise_rms = 0.0);

}  // namespace memrc
