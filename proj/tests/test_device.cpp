#include <cmath>
#include <cstdio>
#include <random>

#include <doctest.h>

#include "memrc/device.hpp"
#include "memrc/errors.hpp"

using namespace memrc;

TEST_CASE("steady-state pore law") {
    const DeviceParams p3 = preset("3.0uM");
    CHECK(steady_state_pores(p3, 0.0) == doctest::Approx(140.0));
    CHECK(steady_state_pores(p3, p3.ve) == doctest::Approx(std::exp(1.0) * 140.0));
    // 140 * e^(57/5.7) = 140 * e^10
    CHECK(steady_state_pores(p3, 0.057) ==
          doctest::Approx(140.0 * std::exp(10.0)).epsilon(1e-12));

    // strictly increasing and convex in v
    double prev = steady_state_pores(p3, -0.05);
    double prev_diff = 0.0;
    for (double v = -0.045; v < 0.2; v += 0.005) {
        const double n = steady_state_pores(p3, v);
        CHECK(n > prev);
        const double diff = n - prev;
        CHECK(diff > prev_diff);
        prev = n;
        prev_diff = diff;
    }
}

TEST_CASE("time constant branches") {
    const DeviceParams p3 = preset("3.0uM");
    CHECK(time_constant(p3, 0.0) == doctest::Approx(1.1e-3));
    // exactly at the threshold the supra branch applies: 0.2 ms * e^(57/19)
    CHECK(time_constant(p3, p3.vt) ==
          doctest::Approx(0.2e-3 * std::exp(3.0)).epsilon(1e-12));
    // the sub branch just below the threshold differs (finite jump)
    const double just_below = time_constant(p3, p3.vt - 1e-9);
    CHECK(just_below == doctest::Approx(1.1e-3 * std::exp(0.057 / 43.2e-3)).epsilon(1e-6));
    CHECK(just_below != doctest::Approx(time_constant(p3, p3.vt)));

    const DeviceParams p1 = preset("1.0uM");
    CHECK(time_constant(p1, 0.050) ==
          doctest::Approx(1e-3 * std::exp(0.050 / 45.4e-3)).epsilon(1e-12));

    // monotone increasing within each branch
    for (double v = 0.0; v < p3.vt - 0.005; v += 0.005)
        CHECK(time_constant(p3, v + 0.005) > time_constant(p3, v));
    for (double v = p3.vt; v < 0.2; v += 0.005)
        CHECK(time_constant(p3, v + 0.005) > time_constant(p3, v));
}

TEST_CASE("derivative") {
    const DeviceParams p3 = preset("3.0uM");
    MemristorState s;
    s.na = steady_state_pores(p3, 0.08);
    CHECK(derivative(p3, s, 0.08) == doctest::Approx(0.0));

    s.na = 0.0;
    CHECK(derivative(p3, s, 0.0) == doctest::Approx(140.0 / 1.1e-3).epsilon(1e-12));

    s.na = 2.0 * steady_state_pores(p3, 0.05);
    CHECK(derivative(p3, s, 0.05) < 0.0);
}

TEST_CASE("step: fixed point and oracle agreement") {
    for (const DeviceParams& p : table_presets()) {
        MemristorState eq = equilibrium_state(p, 0.06);
        const MemristorState stepped = step(p, eq, 0.06, 1e-4);
        CHECK(stepped.na == doctest::Approx(eq.na).epsilon(1e-12));
        CHECK(stepped.t == doctest::Approx(eq.t + 1e-4));
    }

    // relax at 95 mV for 10 tau, rk4 at 0.1 ms: within 0.01% of steady state
    const DeviceParams p3 = preset("3.0uM");
    const double tau = time_constant(p3, 0.095);
    MemristorState s;
    const auto n_steps = static_cast<std::size_t>(std::ceil(10.0 * tau / 1e-4));
    for (std::size_t k = 0; k < n_steps; ++k) s = step(p3, s, 0.095, 1e-4);
    const double target = steady_state_pores(p3, 0.095);
    CHECK(s.na == doctest::Approx(target).epsilon(1e-4));
    const MemristorState exact =
        analytic_hold(p3, MemristorState{}, 0.095, static_cast<double>(n_steps) * 1e-4);
    CHECK(s.na == doctest::Approx(exact.na).epsilon(1e-8));
}

TEST_CASE("euler converges at first order") {
    const DeviceParams p3 = preset("3.0uM");
    const double v = 0.07, horizon = 5e-3;
    const MemristorState exact = analytic_hold(p3, MemristorState{}, v, horizon);
    auto euler_error = [&](double dt) {
        MemristorState s;
        const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
        for (std::size_t k = 0; k < n; ++k)
            s = step(p3, s, v, dt, IntegrationMethod::euler);
        return std::abs(s.na - exact.na);
    };
    const double e1 = euler_error(1e-4);
    const double e2 = euler_error(5e-5);
    const double e4 = euler_error(2.5e-5);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
    CHECK(e2 / e4 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("analytic hold") {
    const DeviceParams p2 = preset("2.0uM");
    MemristorState s;
    s.na = 1234.0;
    const MemristorState same = analytic_hold(p2, s, 0.05, 0.0);
    CHECK(same.na == doctest::Approx(s.na));

    const double tau = time_constant(p2, 0.05);
    const MemristorState one_tau =
        analytic_hold(p2, MemristorState{}, 0.05, tau);
    CHECK(one_tau.na ==
          doctest::Approx((1.0 - std::exp(-1.0)) * steady_state_pores(p2, 0.05)));

    const MemristorState late = analytic_hold(p2, MemristorState{}, 0.05, 100.0 * tau);
    CHECK(late.na == doctest::Approx(steady_state_pores(p2, 0.05)));
}

TEST_CASE("conductance and current observation") {
    const DeviceParams p3 = preset("3.0uM");
    MemristorState s;
    CHECK(conductance(p3, s) == 0.0);
    CHECK(current(p3, s, 0.1) == 0.0);

    s.na = 5e8;
    CHECK(current(p3, s, 0.0) == 0.0);  // pinched at the origin
    const double g = conductance(p3, s);
    CHECK(g == doctest::Approx(p3.g_scale * 5e8));
    s.na = 1e9;
    CHECK(conductance(p3, s) == doctest::Approx(2.0 * g));
    // linear in v at fixed state
    CHECK(current(p3, s, 0.08) == doctest::Approx(2.0 * current(p3, s, 0.04)));
}

TEST_CASE("noise stream is seeded and zero when disabled") {
    NoiseSpec off;
    NoiseStream quiet(off);
    for (int k = 0; k < 10; ++k) CHECK(quiet.draw() == 0.0);

    NoiseSpec spec;
    spec.current_rms = 0.8e-9;
    spec.seed = 42;
    NoiseStream a(spec), b(spec);
    double sum2 = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double d = a.draw();
        CHECK(d == b.draw());
        sum2 += d * d;
    }
    CHECK(std::sqrt(sum2 / 10000.0) == doctest::Approx(0.8e-9).epsilon(0.05));

    const DeviceParams p3 = preset("3.0uM");
    MemristorState s = equilibrium_state(p3, 0.095);
    NoiseStream c(spec);
    const double noisy = current(p3, s, 0.095, c);
    CHECK(noisy != current(p3, s, 0.095));
    CHECK(noisy == doctest::Approx(current(p3, s, 0.095)).epsilon(1e-3));
}

TEST_CASE("state stays non-negative on arbitrary waveforms") {
    const DeviceParams p1 = preset("1.0uM");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> volt(-0.3, 0.3);
    MemristorState s;
    for (int k = 0; k < 5000; ++k) {
        s = step(p1, s, volt(rng), 1e-4);
        CHECK(s.na >= 0.0);
    }
}

TEST_CASE("euler stiffness warning counter") {
    const DeviceParams p3 = preset("3.0uM");
    reset_stiffness_warnings();
    MemristorState s;
    // tau(0 V) = 1.1 ms, so dt = 1 ms violates dt <= tau/2
    s = step(p3, s, 0.0, 1e-3, IntegrationMethod::euler);
    s = step(p3, s, 0.0, 1e-3, IntegrationMethod::euler);
    CHECK(stiffness_warning_count() == 2);
    // rk4 does not warn
    reset_stiffness_warnings();
    s = step(p3, s, 0.0, 1e-3, IntegrationMethod::rk4);
    CHECK(stiffness_warning_count() == 0);
    // small steps do not warn
    s = step(p3, s, 0.0, 1e-4, IntegrationMethod::euler);
    CHECK(stiffness_warning_count() == 0);
    reset_stiffness_warnings();
}

TEST_CASE("presets carry the published constants and 190 nA calibration") {
    const auto& presets = table_presets();
    REQUIRE(presets.size() == 5);

    const DeviceParams p3 = preset("3.0uM");
    CHECK(p3.n0 == doctest::Approx(140.0));
    CHECK(p3.ve == doctest::Approx(5.7e-3));
    CHECK(p3.tau01 == doctest::Approx(1.1e-3));
    CHECK(p3.vtau1 == doctest::Approx(43.2e-3));
    CHECK(p3.tau02 == doctest::Approx(0.2e-3));
    CHECK(p3.vtau2 == doctest::Approx(19.0e-3));
    CHECK(p3.vt == doctest::Approx(57e-3));

    const DeviceParams p1 = preset("1.0uM");
    CHECK(p1.n0 == doctest::Approx(0.044));
    CHECK(p1.ve == doctest::Approx(5.4e-3));
    CHECK(p1.tau02 == doctest::Approx(0.00085e-3));
    CHECK(p1.vt == doctest::Approx(107e-3));

    // operating points: 95 mV at 3.0uM up to 133.6 mV at 1.0uM
    CHECK(operating_v_high(p3) == doctest::Approx(0.095).epsilon(1e-3));
    CHECK(operating_v_high(p1) == doctest::Approx(0.1336).epsilon(2e-3));

    for (const DeviceParams& p : presets) {
        const double vh = operating_v_high(p);
        const MemristorState eq = equilibrium_state(p, vh);
        CHECK(current(p, eq, vh) == doctest::Approx(190e-9).epsilon(1e-9));
    }
    // 190 nA / 95 mV = 2.0 uS steady-state conductance for 3.0uM
    CHECK(conductance(p3, equilibrium_state(p3, 0.095)) ==
          doctest::Approx(2.0e-6).epsilon(1e-6));
}

TEST_CASE("preset file round trip") {
    const std::string path = "presets_roundtrip.json";
    save_presets(table_presets(), path);
    const auto loaded = load_presets(path);
    REQUIRE(loaded.size() == 5);
    for (std::size_t k = 0; k < loaded.size(); ++k) {
        CHECK(loaded[k].label == table_presets()[k].label);
        CHECK(loaded[k].n0 == table_presets()[k].n0);
        CHECK(loaded[k].ve == table_presets()[k].ve);
        CHECK(loaded[k].g_scale == table_presets()[k].g_scale);
        CHECK(loaded[k].vt == table_presets()[k].vt);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_presets("no_such_file.json"), invalid_input);
    CHECK_THROWS_AS(preset("9.9uM"), invalid_input);
}

TEST_CASE("parameter validation") {
    DeviceParams p = preset("2.0uM");
    CHECK_NOTHROW(p.validate());
    p.ve = 0.0;
    CHECK_THROWS_AS(p.validate(), invalid_input);
    p = preset("2.0uM");
    p.tau01 = -1.0;
    CHECK_THROWS_AS(p.validate(), invalid_input);
    p = preset("2.0uM");
    p.n0 = -0.1;
    CHECK_THROWS_AS(p.validate(), invalid_input);

    CHECK_THROWS_AS(step(p, MemristorState{}, 0.05, -1e-4), invalid_input);
    const double nan = std::nan("");
    CHECK_THROWS_AS(step(preset("2.0uM"), MemristorState{}, nan, 1e-4),
                    invalid_input);
}
