#include "memrc/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "memrc/errors.hpp"

namespace memrc {

namespace {

// Ordinary least squares of y against x; returns (intercept, slope, rms).
struct LineFit {
    double intercept, slope, rms;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t j = 0; j < n; ++j) {
        sx += x[j];
        sy += y[j];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < n; ++j) {
        sxx += (x[j] - mx) * (x[j] - mx);
        sxy += (x[j] - mx) * (y[j] - my);
    }
    if (sxx <= 0.0)
        throw numerical_error("fit_line: singular fit, no spread in x");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double r = y[j] - intercept - slope * x[j];
        ss += r * r;
    }
    return {intercept, slope, std::sqrt(ss / n)};
}

}  // namespace

void IvTrace::validate() const {
    if (t.size() != v.size() || t.size() != i.size() || t.size() < 2)
        throw invalid_input("IvTrace: arrays must be aligned with length >= 2");
    for (std::size_t j = 1; j < t.size(); ++j)
        if (!(t[j] > t[j - 1]))
            throw invalid_input("IvTrace: t must be strictly increasing");
}

IvTrace simulate_waveform(const DeviceParams& p, const VoltageWaveform& w,
                          MemristorState start, IntegrationMethod method) {
    w.validate();
    IvTrace trace;
    trace.t.reserve(w.v.size());
    trace.v.reserve(w.v.size());
    trace.i.reserve(w.v.size());
    MemristorState s = start;
    for (double v : w.v) {
        s = step(p, s, v, w.dt, method);
        trace.t.push_back(s.t);
        trace.v.push_back(v);
        trace.i.push_back(current(p, s, v));
    }
    return trace;
}

IvTrace simulate_sweep(const DeviceParams& p, double rate, double v_max,
                       double dt) {
    return simulate_waveform(p, triangle_ramp(rate, v_max, dt),
                             equilibrium_state(p, 0.0));
}

IvTrace simulate_hysteresis(const DeviceParams& p, double freq, double v_max,
                            double dt) {
    return simulate_waveform(p, triangle_period(freq, v_max, dt),
                             equilibrium_state(p, 0.0));
}

PpfResult ppf(const DeviceParams& p, double v_pulse, double v_off, double pw,
              double ipi, double dt) {
    const VoltageWaveform w = pulse_pair(v_pulse, v_off, pw, ipi, dt);
    const IvTrace trace =
        simulate_waveform(p, w, equilibrium_state(p, v_off));
    const std::size_t n_pw =
        static_cast<std::size_t>(std::llround(pw / dt));
    const std::size_t second_start = w.v.size() - n_pw;
    double peak_a = 0.0, peak_b = 0.0;
    for (std::size_t j = 0; j < n_pw; ++j)
        peak_a = std::max(peak_a, trace.i[j]);
    for (std::size_t j = second_start; j < trace.i.size(); ++j)
        peak_b = std::max(peak_b, trace.i[j]);
    if (!(peak_a > 0.0))
        throw invalid_input("ppf: degenerate input, first-pulse peak is 0");
    return {peak_a, peak_b, (peak_b - peak_a) / peak_a * 100.0};
}

std::vector<std::vector<double>> ppf_surface(const DeviceParams& p,
                                             const std::vector<double>& pw_grid,
                                             const std::vector<double>& ipi_grid,
                                             double v_pulse, double v_off,
                                             double dt) {
    if (pw_grid.empty() || ipi_grid.empty())
        throw invalid_input("ppf_surface: grids must be non-empty");
    std::vector<std::vector<double>> out(pw_grid.size());
    for (std::size_t a = 0; a < pw_grid.size(); ++a) {
        out[a].reserve(ipi_grid.size());
        for (double ipi : ipi_grid)
            out[a].push_back(
                ppf(p, v_pulse, v_off, pw_grid[a], ipi, dt).ppf_percent);
    }
    return out;
}

IvTrace simulate_step_decay(const DeviceParams& p, double v_high,
                            const std::vector<double>& v_lows,
                            double hold_high, double hold_low, double dt) {
    const VoltageWaveform w =
        step_decay_waveform(v_high, v_lows, hold_high, hold_low, dt);
    return simulate_waveform(p, w, equilibrium_state(p, v_high));
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& g) {
    if (t.size() != g.size() || t.size() < 3)
        throw invalid_input("fit_decay: need aligned arrays of length >= 3");
    std::vector<double> lg(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!(g[j] > 0.0))
            throw invalid_input("fit_decay: conductance must be > 0");
        lg[j] = std::log(g[j]);
    }
    const LineFit line = fit_line(t, lg);
    if (!(line.slope < 0.0))
        throw numerical_error("fit_decay: segment is not decaying");
    return {std::exp(line.intercept), -1.0 / line.slope, line.rms};
}

SteadyStateFit fit_steady_state(
    const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2)
        throw invalid_input("fit_steady_state: need >= 2 points");
    std::vector<double> v, ln_n;
    v.reserve(points.size());
    ln_n.reserve(points.size());
    for (const auto& [pv, n_ss] : points) {
        if (!(n_ss > 0.0))
            throw invalid_input("fit_steady_state: n_ss must be > 0");
        v.push_back(pv);
        ln_n.push_back(std::log(n_ss));
    }
    const LineFit line = fit_line(v, ln_n);
    if (!(line.slope > 0.0))
        throw numerical_error("fit_steady_state: non-increasing steady state");
    return {std::exp(line.intercept), 1.0 / line.slope, line.rms};
}

TauVoltageFit fit_tau_voltage(
    const std::vector<std::pair<double, double>>& points, double vt) {
    std::vector<double> v_sub, lt_sub, v_sup, lt_sup;
    for (const auto& [v, tau] : points) {
        if (!(tau > 0.0))
            throw invalid_input("fit_tau_voltage: tau must be > 0");
        if (v < vt) {
            v_sub.push_back(v);
            lt_sub.push_back(std::log(tau));
        } else {
            v_sup.push_back(v);
            lt_sup.push_back(std::log(tau));
        }
    }
    if (v_sub.size() < 2 || v_sup.size() < 2)
        throw numerical_error(
            "fit_tau_voltage: need >= 2 points on each side of vt (have " +
            std::to_string(v_sub.size()) + " sub, " +
            std::to_string(v_sup.size()) + " supra)");
    const LineFit sub = fit_line(v_sub, lt_sub);
    const LineFit sup = fit_line(v_sup, lt_sup);
    if (!(sub.slope > 0.0) || !(sup.slope > 0.0))
        throw numerical_error("fit_tau_voltage: tau must increase with v");
    return {std::exp(sub.intercept), 1.0 / sub.slope,
            std::exp(sup.intercept), 1.0 / sup.slope,
            sub.rms,                 sup.rms};
}

double estimate_vt(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4)
        throw invalid_input("estimate_vt: need >= 4 points");
    auto sorted = points;
    std::sort(sorted.begin(), sorted.end());
    double best_sse = std::numeric_limits<double>::infinity();
    std::size_t best_split = 2;
    for (std::size_t k = 2; k + 2 <= sorted.size(); ++k) {
        // split: [0, k) sub, [k, n) supra
        const double vt_candidate =
            0.5 * (sorted[k - 1].first + sorted[k].first);
        TauVoltageFit fit;
        try {
            fit = fit_tau_voltage(sorted, vt_candidate);
        } catch (const numerical_error&) {
            continue;
        }
        const double sse =
            fit.residual_sub * fit.residual_sub * static_cast<double>(k) +
            fit.residual_supra * fit.residual_supra *
                static_cast<double>(sorted.size() - k);
        if (sse < best_sse) {
            best_sse = sse;
            best_split = k;
        }
    }
    if (!std::isfinite(best_sse))
        throw numerical_error("estimate_vt: no valid two-branch split found");
    return 0.5 * (sorted[best_split - 1].first + sorted[best_split].first);
}

double calibrate_scale(const DeviceParams& p, double v_high,
                       double target_current) {
    if (!(v_high > 0.0) || !(target_current > 0.0))
        throw invalid_input("calibrate_scale: v_high and target must be > 0");
    return target_current / (v_high * steady_state_pores(p, v_high));
}

DeviceFitReport fit_device_model(const IvTrace& sweep, const IvTrace& decay,
                                 const StepDecayProtocol& proto, double g_scale,
                                 double vt_hint, double noise_rms) {
    sweep.validate();
    decay.validate();
    if (!(g_scale > 0.0))
        throw invalid_input("fit_device_model: g_scale must be > 0");

    // --- steady-state law from the quasi-steady sweep ----------------------
    // Block-average the up and down ramps, then keep only voltages where the
    // two branches agree (locally quasi-steady) and the current clears the
    // noise floor.
    const std::size_t half = sweep.t.size() / 2;
    const std::size_t stride = std::max<std::size_t>(1, half / 2000);
    auto block_points = [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, double>> pts;  // (v, g)
        for (std::size_t j = begin; j + stride <= end; j += stride) {
            double sv = 0, si = 0;
            for (std::size_t k = j; k < j + stride; ++k) {
                sv += sweep.v[k];
                si += sweep.i[k];
            }
            const double v = sv / static_cast<double>(stride);
            const double i = si / static_cast<double>(stride);
            if (v > 2e-3) pts.emplace_back(v, i / v);
        }
        return pts;
    };
    const auto up = block_points(0, half);
    auto down = block_points(half, sweep.t.size());
    std::sort(down.begin(), down.end());

    const double g_noise =
        noise_rms > 0.0 ? noise_rms / std::sqrt(static_cast<double>(stride))
                        : 0.0;
    const double i_floor = noise_rms > 0.0 ? 25.0 * noise_rms : 0.0;

    std::vector<std::pair<double, double>> ss_points;  // (v, n_ss)
    for (const auto& [v, g_up] : up) {
        if (g_up * v < i_floor) continue;
        auto it = std::lower_bound(down.begin(), down.end(),
                                   std::make_pair(v, 0.0));
        if (it == down.end()) continue;
        const double g_down = it->second;
        if (!(g_down > 0.0)) continue;
        const double g_avg = 0.5 * (g_up + g_down);
        const double tol = std::max(0.02 * g_avg, 5.0 * g_noise / v);
        if (std::abs(g_up - g_down) > tol) continue;
        if (!(g_avg > 0.0)) continue;
        ss_points.emplace_back(v, g_avg / g_scale);
    }
    if (ss_points.size() < 10)
        throw numerical_error(
            "fit_device_model: too few quasi-steady sweep points");
    const SteadyStateFit ss = fit_steady_state(ss_points);

    // --- tau(v) from the step-decay segments -------------------------------
    const double dt = decay.t[1] - decay.t[0];
    const std::size_t n_high =
        static_cast<std::size_t>(std::llround(proto.hold_high / dt));
    const std::size_t n_low =
        static_cast<std::size_t>(std::llround(proto.hold_low / dt));
    std::vector<std::pair<double, double>> tau_points;
    for (std::size_t s = 0; s < proto.v_lows.size(); ++s) {
        const double v_low = proto.v_lows[s];
        if (!(v_low > 2e-3)) continue;  // conductance unobservable near 0 V
        const std::size_t begin = n_high + s * (n_low + n_high);
        if (begin + n_low > decay.t.size())
            throw invalid_input("fit_device_model: decay trace shorter than "
                                "the stated protocol");
        // Fit the slope of lagged differences g(t) - g(t + T): for an
        // exponential relaxation this is again exponential with the same
        // time constant, and the unknown asymptote cancels exactly, so an
        // imperfect steady-state fit cannot bias tau.  Skip the first 2
        // samples after the step so the Ohmic jump does not contaminate it.
        const std::size_t lag = std::max<std::size_t>(1, n_low / 2);
        std::vector<double> raw_t, raw_d;
        for (std::size_t j = begin + 2; j + lag < begin + n_low; ++j) {
            raw_t.push_back(decay.t[j] - decay.t[begin + 2]);
            raw_d.push_back((decay.i[j] - decay.i[j + lag]) / v_low);
        }
        if (raw_d.size() < 3) continue;
        // Average the differences into equal-width blocks before taking
        // logs: equal blocks of an exponential share one shape factor, so
        // the slope is unbiased, while per-block noise shrinks by
        // sqrt(block size) and a single noisy sample cannot truncate the
        // fit window.
        const std::size_t bs =
            std::max<std::size_t>(1, raw_d.size() / 64);
        const double sigma_b = noise_rms > 0.0
                                   ? std::sqrt(2.0) * noise_rms /
                                         (v_low * std::sqrt(
                                                      static_cast<double>(bs)))
                                   : 0.0;
        std::vector<double> ts, gs;
        double delta0 = 0.0;
        for (std::size_t b = 0; (b + 1) * bs <= raw_d.size(); ++b) {
            double st = 0, sd = 0;
            for (std::size_t k = b * bs; k < (b + 1) * bs; ++k) {
                st += raw_t[k];
                sd += raw_d[k];
            }
            const double delta = sd / static_cast<double>(bs);
            if (ts.empty()) delta0 = delta;
            if (!(delta > std::max(1e-3 * delta0, 3.0 * sigma_b))) break;
            ts.push_back(st / static_cast<double>(bs));
            gs.push_back(delta);
        }
        if (ts.size() < 3) continue;  // too fast or too noisy at this v_low
        try {
            tau_points.emplace_back(v_low, fit_decay(ts, gs).tau);
        } catch (const numerical_error&) {
            continue;
        }
    }
    const double vt = vt_hint >= 0.0 ? vt_hint : estimate_vt(tau_points);
    const TauVoltageFit tf = fit_tau_voltage(tau_points, vt);

    DeviceFitReport report;
    report.params = {ss.n0, ss.ve,    tf.tau01, tf.vtau1, tf.tau02,
                     tf.vtau2, vt,    g_scale,  "fitted"};
    report.params.validate();
    report.ss_residual = ss.residual;
    report.tau_residual_sub = tf.residual_sub;
    report.tau_residual_supra = tf.residual_supra;
    report.tau_points = std::move(tau_points);
    return report;
}

}  // namespace memrc
