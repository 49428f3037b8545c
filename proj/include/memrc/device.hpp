#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace memrc {

// Fitted constants of one alamethicin memristor plus the conductance scale
// (conductance-per-pore times membrane area folded into one number).
struct DeviceParams {
    double n0;       // pores/m^2 open at 0 V
    double ve;       // V, e-fold voltage of the steady-state pore density
    double tau01;    // s, sub-threshold time constant at 0 V
    double vtau1;    // V, e-fold voltage of tau below threshold
    double tau02;    // s, supra-threshold time-constant prefactor
    double vtau2;    // V, e-fold voltage of tau above threshold
    double vt;       // V, insertion threshold
    double g_scale;  // S*m^2/pore, G_u * A
    std::string label;

    void validate() const;  // throws invalid_input on a bad parameter set
};

// Instantaneous device state: pore density and elapsed simulation time.
struct MemristorState {
    double na = 0.0;  // pores/m^2
    double t = 0.0;   // s
};

// Additive Gaussian observation noise on the measured current.
// current_rms = 0 means noiseless.
struct NoiseSpec {
    double current_rms = 0.0;  // A
    std::uint64_t seed = 0;
};

// Seeded stream of Gaussian current-noise draws.
class NoiseStream {
public:
    explicit NoiseStream(const NoiseSpec& spec)
        : rms_(spec.current_rms), rng_(spec.seed) {}

    // One draw of std = current_rms; exactly zero when noiseless.
    double draw() {
        if (rms_ <= 0.0) return 0.0;
        return rms_ * normal_(rng_);
    }

private:
    double rms_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

enum class IntegrationMethod { euler, rk4 };

// N_ss(v) = n0 * exp(v / ve)
double steady_state_pores(const DeviceParams& p, double v);

// Piecewise-exponential time constant; the supra-threshold branch owns
// v = vt exactly.  No smoothing across the branch jump.
double time_constant(const DeviceParams& p, double v);

// dNa/dt = (N_ss(v) - na) / tau(v)
double derivative(const DeviceParams& p, const MemristorState& s, double v);

// One fixed step with v held constant; na clamped at 0, t advanced by dt.
MemristorState step(const DeviceParams& p, const MemristorState& s, double v,
                    double dt, IntegrationMethod method = IntegrationMethod::rk4);

// Exact relaxation toward N_ss(v) over `duration`; the oracle for step().
MemristorState analytic_hold(const DeviceParams& p, const MemristorState& s,
                             double v, double duration);

// G = g_scale * na
double conductance(const DeviceParams& p, const MemristorState& s);

// Noiseless observed current G * v.
double current(const DeviceParams& p, const MemristorState& s, double v);

// Observed current with one noise draw added.
double current(const DeviceParams& p, const MemristorState& s, double v,
               NoiseStream& noise);

// State resting at the fixed point of a constant voltage.
MemristorState equilibrium_state(const DeviceParams& p, double v);

// Count of integration steps taken with dt > tau(v)/2 under euler since the
// last reset (thread-local).  The first offending step also prints a note.
unsigned long stiffness_warning_count();
void reset_stiffness_warnings();

// Operating voltage at which this device passes the 190 nA calibration
// current at steady state (95 mV for the 3.0uM preset, 133.6 mV at 1.0uM).
double operating_v_high(const DeviceParams& p);

// The five concentration presets, g_scale calibrated to 190 nA at each
// device's operating voltage.  Labels: "1.0uM" .. "3.0uM".
const std::vector<DeviceParams>& table_presets();
DeviceParams preset(const std::string& label);

// Preset file support: JSON document keyed by label, field names matching
// DeviceParams.
std::vector<DeviceParams> load_presets(const std::string& path);
void save_presets(const std::vector<DeviceParams>& presets,
                  const std::string& path);

}  // namespace memrc
