#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "memrc/characterize.hpp"
#include "memrc/device.hpp"
#include "memrc/errors.hpp"
#include "memrc/io.hpp"
#include "memrc/metrics.hpp"
#include "memrc/readout.hpp"
#include "memrc/reservoir.hpp"
#include "memrc/tasks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flag values carry explicit unit suffixes (170mV, 3ms, 0.2Hz, ...).  Bare
// numbers are rejected: the voltage and time scales in play differ by enough
// orders of magnitude that silent unit mistakes are the main failure mode.
double parse_unit(const std::string& text, const std::string& kind) {
    static const std::map<std::string, std::pair<std::string, double>> units = {
        {"V", {"voltage", 1.0}},    {"mV", {"voltage", 1e-3}},
        {"uV", {"voltage", 1e-6}},  {"s", {"time", 1.0}},
        {"ms", {"time", 1e-3}},     {"us", {"time", 1e-6}},
        {"Hz", {"rate", 1.0}},      {"mHz", {"rate", 1e-3}},
        {"kHz", {"rate", 1e3}},     {"A", {"current", 1.0}},
        {"nA", {"current", 1e-9}},  {"pA", {"current", 1e-12}},
        {"uA", {"current", 1e-6}},  {"V/s", {"sweep-rate", 1.0}},
        {"mV/s", {"sweep-rate", 1e-3}},
    };
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw memrc::invalid_input("cannot parse '" + text + "' as a " + kind);
    }
    const std::string suffix = text.substr(used);
    auto it = units.find(suffix);
    if (it == units.end() || it->second.first != kind)
        throw memrc::invalid_input("'" + text + "': expected a " + kind +
                                   " with an explicit unit suffix (e.g. " +
                                   (kind == "voltage"  ? "170mV"
                                    : kind == "time"   ? "3ms"
                                    : kind == "rate"   ? "10kHz"
                                    : kind == "current" ? "0.8nA"
                                                        : "2mV/s") +
                                   ")");
    return value * it->second.second;
}

std::vector<memrc::DeviceParams> resolve_presets(const std::string& preset_file) {
    if (!preset_file.empty()) return memrc::load_presets(preset_file);
    if (const char* env = std::getenv("MEMRC_PRESETS"); env && *env)
        return memrc::load_presets(env);
    return memrc::table_presets();
}

memrc::DeviceParams find_device(const std::vector<memrc::DeviceParams>& bank,
                                const std::string& label) {
    for (const auto& p : bank)
        if (p.label == label) return p;
    std::string known;
    for (const auto& p : bank) known += (known.empty() ? "" : ", ") + p.label;
    throw memrc::invalid_input("unknown device label '" + label +
                               "' (known: " + known + ")");
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw memrc::invalid_input("cannot open config '" + path + "'");
    json cfg;
    try {
        in >> cfg;
    } catch (const std::exception& e) {
        throw memrc::invalid_input("config '" + path + "': " + e.what());
    }
    if (!cfg.is_object())
        throw memrc::invalid_input("config '" + path + "' must be a JSON object");
    return cfg;
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out)
        throw memrc::invalid_input("cannot open '" + path.string() +
                                   "' for writing");
    out << j.dump(2) << '\n';
}

// Config lookup helpers: flags (already parsed into optionals) override
// config fields; config fields override defaults.
double cfg_num(const json& cfg, const std::string& key,
               const std::optional<double>& flag, double fallback) {
    if (flag) return *flag;
    if (cfg.contains(key)) {
        if (!cfg[key].is_number())
            throw memrc::invalid_input("config field '" + key +
                                       "' must be a number");
        return cfg[key].get<double>();
    }
    return fallback;
}

std::uint64_t cfg_seed(const json& cfg, const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (cfg.contains("seed")) return cfg["seed"].get<std::uint64_t>();
    return 0;
}

memrc::ReservoirConfig bank_from_config(const json& cfg,
                                        const std::string& preset_file,
                                        const std::vector<std::string>& flag_devices) {
    const auto presets = resolve_presets(preset_file);
    memrc::ReservoirConfig rc;
    std::vector<std::string> labels = flag_devices;
    if (labels.empty() && cfg.contains("bank"))
        labels = cfg["bank"].get<std::vector<std::string>>();
    if (labels.empty())
        for (const auto& p : presets) labels.push_back(p.label);
    for (const auto& label : labels)
        rc.devices.push_back(find_device(presets, label));
    if (cfg.contains("offsets"))
        rc.per_device_offset = cfg["offsets"].get<std::vector<double>>();
    return rc;
}

struct CommonFlags {
    std::string config_file, preset_file, output_dir = ".";
    std::vector<std::string> devices;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise;  // A
    std::size_t threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_noise = true) {
    cmd->add_option("--config", flags.config_file, "JSON config file");
    cmd->add_option("--presets", flags.preset_file,
                    "device preset JSON (default: MEMRC_PRESETS or built-in)");
    cmd->add_option("--output-dir,-o", flags.output_dir, "artifact directory");
    cmd->add_option("--device,-d", flags.devices,
                    "device label(s), e.g. 3.0uM (repeatable)");
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--threads", flags.threads,
                    "parallelism cap (0 = hardware concurrency)");
    if (with_noise) {
        cmd->add_option_function<std::string>(
            "--noise",
            [&flags](const std::string& s) {
                flags.noise = parse_unit(s, "current");
            },
            "observation-noise RMS, e.g. 0.8nA");
    }
}

void apply_noise(memrc::ReservoirConfig& rc, const json& cfg,
                 const CommonFlags& flags) {
    rc.noise.current_rms = cfg_num(cfg, "noise_rms_A", flags.noise, 0.0);
    rc.noise.seed = cfg_seed(cfg, flags.seed) + 0x9e3779b97f4a7c15ull;
}

// --- characterize -----------------------------------------------------------

int cmd_characterize(const CommonFlags& flags, const std::string& which,
                     std::optional<double> v_pulse, std::optional<double> v_off,
                     std::optional<double> pw, std::optional<double> ipi,
                     std::optional<double> rate, std::optional<double> freq,
                     std::optional<double> v_max, std::optional<double> dt) {
    const json cfg = load_config(flags.config_file);
    if (flags.devices.size() != 1)
        throw memrc::invalid_input("characterize: exactly one --device required");
    const auto presets = resolve_presets(flags.preset_file);
    const memrc::DeviceParams p = find_device(presets, flags.devices[0]);
    const fs::path out_dir(flags.output_dir);
    fs::create_directories(out_dir);

    const double dt_s = dt.value_or(1e-4);
    json summary = {{"device", p.label}, {"which", which}};

    if (which == "sweep") {
        const memrc::IvTrace trace =
            memrc::simulate_sweep(p, rate.value_or(2e-3), v_max.value_or(0.170), dt_s);
        memrc::write_trace_csv(trace, (out_dir / "sweep.csv").string());
        summary["trace"] = "sweep.csv";
        summary["rate_V_per_s"] = rate.value_or(2e-3);
    } else if (which == "hysteresis") {
        const memrc::IvTrace trace = memrc::simulate_hysteresis(
            p, freq.value_or(0.2), v_max.value_or(0.170), dt_s);
        memrc::write_trace_csv(trace, (out_dir / "hysteresis.csv").string());
        summary["trace"] = "hysteresis.csv";
        summary["freq_Hz"] = freq.value_or(0.2);
    } else if (which == "decay") {
        const double vh = v_pulse.value_or(memrc::operating_v_high(p));
        const memrc::IvTrace trace = memrc::simulate_step_decay(
            p, vh, {v_off.value_or(0.050)}, 0.5, 0.3, dt_s);
        memrc::write_trace_csv(trace, (out_dir / "decay.csv").string());
        summary["trace"] = "decay.csv";
        summary["v_high_V"] = vh;
    } else if (which == "ppf") {
        const memrc::PpfResult r =
            memrc::ppf(p, v_pulse.value_or(0.170), v_off.value_or(0.0),
                       pw.value_or(5e-3), ipi.value_or(5e-3), dt_s);
        summary["peak_a_A"] = r.peak_a;
        summary["peak_b_A"] = r.peak_b;
        summary["ppf_percent"] = r.ppf_percent;
    } else if (which == "ppf-surface") {
        const std::vector<double> pw_grid = {5e-3, 10e-3, 20e-3};
        const std::vector<double> ipi_grid = {5e-3, 10e-3, 20e-3, 50e-3};
        const auto surface = memrc::ppf_surface(
            p, pw_grid, ipi_grid, v_pulse.value_or(0.170), v_off.value_or(0.0), dt_s);
        summary["pw_s"] = pw_grid;
        summary["ipi_s"] = ipi_grid;
        summary["ppf_percent"] = surface;
    } else {
        throw memrc::invalid_input(
            "characterize: unknown --which '" + which +
            "' (expected sweep, hysteresis, decay, ppf or ppf-surface)");
    }
    write_json_file(summary, out_dir / "characterize_summary.json");
    std::cout << summary.dump(2) << '\n';
    return 0;
}

// --- sonds ------------------------------------------------------------------

int cmd_sonds(const CommonFlags& flags, std::optional<double> gamma,
              std::optional<double> delta, std::optional<double> dt_hold) {
    const json cfg = load_config(flags.config_file);
    memrc::ReservoirConfig rc = bank_from_config(cfg, flags.preset_file, flags.devices);
    apply_noise(rc, cfg, flags);

    const std::uint64_t seed = cfg_seed(cfg, flags.seed);
    const auto n_train = cfg.value("n_train", std::size_t{300});
    const auto n_test = cfg.value("n_test", std::size_t{300});
    const auto washout = cfg.value("washout", std::size_t{50});
    auto [train, test] = memrc::gen_sonds(n_train, n_test, seed);

    const double g = cfg_num(cfg, "gamma_V", gamma, 0.160);
    const double d = cfg_num(cfg, "delta_V", delta, 0.090);
    const double h = cfg_num(cfg, "dt_hold_s", dt_hold, 3e-3);

    memrc::LinearReadout model;
    std::vector<double> pred_train, pred_test;
    const memrc::GridCell cell = memrc::evaluate_sonds_cell(
        rc, train, test, g, d, h, washout, &model, &pred_train, &pred_test);
    if (cell.failed()) throw memrc::numerical_error(cell.error);

    const fs::path out_dir(flags.output_dir);
    fs::create_directories(out_dir);
    memrc::write_sonds_csv(train, (out_dir / "train_dataset.csv").string());
    memrc::write_sonds_csv(test, (out_dir / "test_dataset.csv").string());
    std::vector<double> y_train(train.y.begin() + washout, train.y.end());
    std::vector<double> y_test(test.y.begin() + washout, test.y.end());
    memrc::write_prediction_csv(pred_train, y_train,
                                (out_dir / "pred_train.csv").string());
    memrc::write_prediction_csv(pred_test, y_test,
                                (out_dir / "pred_test.csv").string());
    memrc::save_linear(model, (out_dir / "model.json").string());

    json summary = {
        {"task", "sonds"},
        {"devices", rc.devices.size()},
        {"seed", seed},
        {"gamma_V", g},
        {"delta_V", d},
        {"dt_hold_s", h},
        {"noise_rms_A", rc.noise.current_rms},
        {"nmse_train", cell.nmse_train},
        {"nmse_test", cell.nmse_test},
        {"nmse_train_var", cell.nmse_train_eq8},
        {"nmse_test_var", cell.nmse_test_eq8},
        {"trained_parameters", model.weights.size() + 1},
    };
    write_json_file(summary, out_dir / "sonds_summary.json");
    std::cout << summary.dump(2) << '\n';
    return 0;
}

// --- neuro ------------------------------------------------------------------

int cmd_neuro(const CommonFlags& flags, const std::string& readout,
              std::size_t nodes, std::size_t kernel,
              std::optional<std::size_t> epochs) {
    const json cfg = load_config(flags.config_file);
    memrc::ReservoirConfig rc = bank_from_config(cfg, flags.preset_file, flags.devices);
    if (rc.devices.empty() || (flags.devices.empty() && !cfg.contains("bank"))) {
        // neural default: three identical devices distinguished by offset
        rc.devices.assign(3, memrc::preset("3.0uM"));
    }
    apply_noise(rc, cfg, flags);
    rc.per_device_offset.clear();

    const double scale = cfg.value("scale", 1.8);
    std::vector<double> offsets = {0.085, 0.090, 0.095};
    if (cfg.contains("neural_offsets_V"))
        offsets = cfg["neural_offsets_V"].get<std::vector<double>>();
    if (offsets.size() != rc.devices.size())
        throw memrc::invalid_input("neuro: need one encoding offset per device");

    const std::uint64_t seed = cfg_seed(cfg, flags.seed);
    const auto per_class = cfg.value("patterns_per_class", std::size_t{400});
    const auto train_per_class = cfg.value("train_per_class", std::size_t{320});

    std::map<memrc::NeuralClass, std::vector<memrc::NeuralPattern>> patterns;
    for (int c = 0; c < 4; ++c) {
        const auto cls = static_cast<memrc::NeuralClass>(c);
        patterns[cls] = memrc::gen_neural_patterns(
            cls, per_class, seed * 977 + static_cast<std::uint64_t>(c));
    }
    const memrc::NeuralDatasetSplit split =
        memrc::split_neural_dataset(patterns, train_per_class, seed);

    auto labels_of = [](const std::vector<memrc::NeuralPattern>& ps) {
        std::vector<int> labels;
        for (const auto& p : ps)
            labels.push_back(static_cast<int>(p.class_label));
        return labels;
    };
    const std::vector<int> y_train = labels_of(split.train);
    const std::vector<int> y_test = labels_of(split.test);

    auto blocks_train = memrc::run_neural(rc, split.train, scale, offsets, nodes);
    auto blocks_test = memrc::run_neural(rc, split.test, scale, offsets, nodes);
    // conductance decays exponentially between spikes, so log-conductance is
    // the feature that varies linearly with spike timing; z-scoring (below)
    // then uses train statistics only
    for (auto* blocks : {&blocks_train, &blocks_test})
        for (auto& b : *blocks)
            for (double& v : b.values) v = std::log10(std::max(v, 1e-300));

    memrc::TrainConfig tc;
    tc.seed = seed;
    if (epochs) tc.epochs = *epochs;

    const fs::path out_dir(flags.output_dir);
    fs::create_directories(out_dir);

    memrc::TrainTrace trace;
    memrc::ClassifierEval train_eval, test_eval;
    std::size_t param_count = 0;

    const std::size_t m = rc.devices.size();
    if (readout == "fc") {
        const memrc::StateMatrix x_train_raw = memrc::flatten_blocks(blocks_train);
        const memrc::StateMatrix x_test_raw = memrc::flatten_blocks(blocks_test);
        const memrc::Normalizer norm =
            memrc::Normalizer::fit(x_train_raw, memrc::NormMode::zscore);
        const memrc::StateMatrix x_train = norm.apply(x_train_raw);
        const memrc::StateMatrix x_test = norm.apply(x_test_raw);
        const memrc::FcReadout model =
            memrc::train_fc(x_train, y_train, tc, &trace);
        param_count = model.param_count();
        train_eval = memrc::evaluate_classifier(model, x_train, y_train);
        test_eval = memrc::evaluate_classifier(model, x_test, y_test);
        memrc::save_fc(model, tc, trace, (out_dir / "model.json").string());
    } else if (readout == "convfc") {
        auto normalize_blocks = [&](const std::vector<memrc::FeatureBlock>& in,
                                    const memrc::Normalizer& norm) {
            std::vector<memrc::FeatureBlock> out = in;
            for (auto& b : out)
                for (std::size_t d = 0; d < b.m; ++d)
                    for (std::size_t j = 0; j < b.n; ++j)
                        b.at(d, j) = (b.at(d, j) - norm.shift[d * b.n + j]) /
                                     norm.scale[d * b.n + j];
            return out;
        };
        const memrc::Normalizer norm = memrc::Normalizer::fit(
            memrc::flatten_blocks(blocks_train), memrc::NormMode::zscore, nodes);
        const auto x_train = normalize_blocks(blocks_train, norm);
        const auto x_test = normalize_blocks(blocks_test, norm);
        const memrc::ConvFcReadout model =
            memrc::train_convfc(x_train, y_train, m, nodes, kernel, tc, &trace);
        param_count = model.param_count();
        train_eval = memrc::evaluate_classifier(model, x_train, y_train);
        test_eval = memrc::evaluate_classifier(model, x_test, y_test);
        memrc::save_convfc(model, tc, trace, (out_dir / "model.json").string());
    } else {
        throw memrc::invalid_input("neuro: unknown --readout '" + readout +
                                   "' (expected fc or convfc)");
    }

    memrc::write_loss_csv(trace.loss, (out_dir / "loss.csv").string());
    memrc::write_confusion_json(test_eval.matrix,
                                (out_dir / "confusion.json").string());

    json summary = {
        {"task", "neuro"},
        {"readout", readout},
        {"devices", m},
        {"nodes", nodes},
        {"seed", seed},
        {"trained_parameters", param_count},
        {"epochs_run", trace.epochs_run},
        {"final_loss", trace.final_loss},
        {"train_accuracy", train_eval.accuracy},
        {"test_accuracy", test_eval.accuracy},
    };
    if (readout == "convfc") summary["kernel"] = kernel;
    write_json_file(summary, out_dir / "neuro_summary.json");
    std::cout << summary.dump(2) << '\n';
    return 0;
}

// --- gridsearch -------------------------------------------------------------

int cmd_gridsearch(const CommonFlags& flags, std::size_t gamma_points,
                   std::size_t delta_points, std::size_t dt_points) {
    const json cfg = load_config(flags.config_file);
    memrc::ReservoirConfig rc = bank_from_config(cfg, flags.preset_file, flags.devices);
    apply_noise(rc, cfg, flags);

    const std::uint64_t seed = cfg_seed(cfg, flags.seed);
    const auto washout = cfg.value("washout", std::size_t{50});
    auto [train, test] = memrc::gen_sonds(cfg.value("n_train", std::size_t{300}),
                                          cfg.value("n_test", std::size_t{300}),
                                          seed);
    const memrc::GridSpec grid =
        memrc::GridSpec::default_grid(gamma_points, delta_points, dt_points);
    const std::vector<memrc::GridCell> cells =
        memrc::grid_search(rc, grid, train, test, washout, flags.threads);

    const fs::path out_dir(flags.output_dir);
    fs::create_directories(out_dir);
    memrc::write_grid_csv(cells, (out_dir / "grid.csv").string());

    const memrc::GridCell& best = cells.front();
    if (best.failed())
        throw memrc::numerical_error("gridsearch: every cell failed; first: " +
                                     best.error);
    std::size_t failed = 0;
    for (const auto& c : cells) failed += c.failed();

    json best_config = {
        {"bank", [&] {
             std::vector<std::string> labels;
             for (const auto& p : rc.devices) labels.push_back(p.label);
             return labels;
         }()},
        {"seed", seed},
        {"gamma_V", best.gamma},
        {"delta_V", best.delta},
        {"dt_hold_s", best.dt_hold},
        {"washout", washout},
        {"noise_rms_A", rc.noise.current_rms},
        {"nmse_test", best.nmse_test},
        {"cells", cells.size()},
        {"failed_cells", failed},
    };
    write_json_file(best_config, out_dir / "best_config.json");
    std::cout << best_config.dump(2) << '\n';
    return 0;
}

// --- fit --------------------------------------------------------------------

int cmd_fit(const CommonFlags& flags, const std::string& sweep_csv,
            const std::string& decay_csv, std::optional<double> v_high,
            std::vector<std::string> v_low_flags, std::optional<double> hold_high,
            std::optional<double> hold_low, std::optional<double> g_scale,
            std::optional<double> vt_hint, std::optional<double> noise_rms) {
    const memrc::IvTrace sweep = memrc::read_trace_csv(sweep_csv);
    const memrc::IvTrace decay = memrc::read_trace_csv(decay_csv);

    memrc::StepDecayProtocol proto;
    if (!v_high)
        throw memrc::invalid_input("fit: --v-high is required (e.g. 95mV)");
    proto.v_high = *v_high;
    if (v_low_flags.empty())
        throw memrc::invalid_input("fit: at least one --v-low is required");
    for (const auto& s : v_low_flags)
        proto.v_lows.push_back(parse_unit(s, "voltage"));
    proto.hold_high = hold_high.value_or(0.5);
    proto.hold_low = hold_low.value_or(0.3);

    // conductance -> pore-density conversion cannot be recovered from I-V
    // traces alone, so it is an explicit input
    const double gs = g_scale.value_or(memrc::preset("3.0uM").g_scale);

    const memrc::DeviceFitReport report = memrc::fit_device_model(
        sweep, decay, proto, gs, vt_hint.value_or(-1.0), noise_rms.value_or(0.0));

    const fs::path out_dir(flags.output_dir);
    fs::create_directories(out_dir);
    memrc::write_fit_report_json(report, (out_dir / "fit_report.json").string());
    std::ifstream back(out_dir / "fit_report.json");
    std::cout << back.rdbuf();
    return 0;
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const CommonFlags& flags, const std::string& waveform_csv,
                 const std::string& method) {
    if (flags.devices.size() != 1)
        throw memrc::invalid_input("simulate: exactly one --device required");
    const auto presets = resolve_presets(flags.preset_file);
    const memrc::DeviceParams p = find_device(presets, flags.devices[0]);

    // reuse the trace reader; the current column of the input is ignored
    std::ifstream probe(waveform_csv);
    if (!probe)
        throw memrc::invalid_input("cannot open '" + waveform_csv + "' for reading");
    const memrc::IvTrace input = [&] {
        std::string header;
        std::getline(probe, header);
        if (header.rfind("t_s,v_V", 0) != 0)
            throw memrc::invalid_input(waveform_csv +
                                       ": row 1: expected header t_s,v_V[,i_A]");
        memrc::IvTrace t;
        std::string line;
        std::size_t row = 1;
        while (std::getline(probe, line)) {
            ++row;
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            std::vector<double> f;
            while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
            if (f.size() < 2)
                throw memrc::invalid_input(waveform_csv + ": row " +
                                           std::to_string(row) + ": need t,v");
            t.t.push_back(f[0]);
            t.v.push_back(f[1]);
            t.i.push_back(0.0);
        }
        if (t.t.size() < 2)
            throw memrc::invalid_input(waveform_csv + ": need >= 2 samples");
        return t;
    }();

    memrc::VoltageWaveform w;
    w.dt = input.t[1] - input.t[0];
    w.v = input.v;
    const memrc::IntegrationMethod im = method == "euler"
                                            ? memrc::IntegrationMethod::euler
                                            : memrc::IntegrationMethod::rk4;
    if (method != "euler" && method != "rk4")
        throw memrc::invalid_input("simulate: unknown --method '" + method + "'");
    const memrc::IvTrace out =
        memrc::simulate_waveform(p, w, memrc::equilibrium_state(p, w.v.front()), im);

    const fs::path out_dir(flags.output_dir);
    fs::create_directories(out_dir);
    memrc::write_trace_csv(out, (out_dir / "simulated.csv").string());
    std::cout << "wrote " << (out_dir / "simulated.csv").string() << " ("
              << out.t.size() << " samples)\n";
    return 0;
}

void add_unit_option(CLI::App* cmd, const std::string& name,
                     std::optional<double>& slot, const std::string& kind,
                     const std::string& help) {
    cmd->add_option_function<std::string>(
        name, [&slot, kind](const std::string& s) { slot = parse_unit(s, kind); },
        help);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Ion-channel memristor simulator and reservoir-computing benchmarks"};
    app.require_subcommand(1);

    CommonFlags cf_char, cf_sonds, cf_neuro, cf_grid, cf_fit, cf_sim;

    // characterize
    auto* c_char = app.add_subcommand(
        "characterize", "simulate a characterization protocol on one preset");
    add_common(c_char, cf_char, false);
    std::string which = "sweep";
    c_char->add_option("--which", which,
                       "sweep, hysteresis, decay, ppf or ppf-surface");
    std::optional<double> ch_v, ch_off, ch_pw, ch_ipi, ch_rate, ch_freq, ch_vmax,
        ch_dt;
    add_unit_option(c_char, "--v", ch_v, "voltage", "pulse/hold amplitude (170mV)");
    add_unit_option(c_char, "--v-off", ch_off, "voltage", "inter-pulse level (0mV)");
    add_unit_option(c_char, "--pw", ch_pw, "time", "pulse width (5ms)");
    add_unit_option(c_char, "--ipi", ch_ipi, "time",
                    "inter-pulse interval, end of A to start of B (5ms)");
    add_unit_option(c_char, "--rate", ch_rate, "sweep-rate", "sweep rate (2mV/s)");
    add_unit_option(c_char, "--freq", ch_freq, "rate", "hysteresis frequency (0.2Hz)");
    add_unit_option(c_char, "--v-max", ch_vmax, "voltage", "sweep peak (170mV)");
    add_unit_option(c_char, "--dt", ch_dt, "time", "integration step (0.1ms)");

    // sonds
    auto* c_sonds =
        app.add_subcommand("sonds", "second-order dynamical-system benchmark");
    add_common(c_sonds, cf_sonds);
    std::optional<double> so_gamma, so_delta, so_hold;
    add_unit_option(c_sonds, "--gamma", so_gamma, "voltage", "input scale (160mV)");
    add_unit_option(c_sonds, "--delta", so_delta, "voltage", "input offset (90mV)");
    add_unit_option(c_sonds, "--dt-hold", so_hold, "time", "hold per point (3ms)");

    // neuro
    auto* c_neuro =
        app.add_subcommand("neuro", "neural-activity pattern classification");
    add_common(c_neuro, cf_neuro);
    std::string readout = "convfc";
    std::size_t nodes = 20, kernel = 9;
    std::optional<std::size_t> epochs;
    c_neuro->add_option("--readout", readout, "fc or convfc");
    c_neuro->add_option("--nodes", nodes, "virtual nodes per pattern (20)");
    c_neuro->add_option("--kernel", kernel, "conv kernel width (9)");
    c_neuro->add_option("--epochs", epochs, "training epochs (2000)");

    // gridsearch
    auto* c_grid = app.add_subcommand(
        "gridsearch", "encoding-parameter sweep over the benchmark pipeline");
    add_common(c_grid, cf_grid);
    std::size_t gp = 20, dp = 20, tp = 20;
    c_grid->add_option("--gamma-points", gp, "grid points on the scale axis");
    c_grid->add_option("--delta-points", dp, "grid points on the offset axis");
    c_grid->add_option("--dt-points", tp, "grid points on the hold-time axis");

    // fit
    auto* c_fit = app.add_subcommand(
        "fit", "recover model parameters from sweep + step-decay traces");
    add_common(c_fit, cf_fit, false);
    std::string sweep_csv, decay_csv;
    c_fit->add_option("--sweep", sweep_csv, "quasi-steady sweep trace CSV")
        ->required();
    c_fit->add_option("--decay", decay_csv, "step-decay trace CSV")->required();
    std::optional<double> f_vhigh, f_hh, f_hl, f_gs, f_vt, f_noise;
    std::vector<std::string> f_vlows;
    add_unit_option(c_fit, "--v-high", f_vhigh, "voltage",
                    "high hold of the decay protocol");
    c_fit->add_option("--v-low", f_vlows,
                      "low hold(s) of the decay protocol, e.g. 50mV (repeatable)");
    add_unit_option(c_fit, "--hold-high", f_hh, "time", "high-hold duration (500ms)");
    add_unit_option(c_fit, "--hold-low", f_hl, "time", "low-hold duration (300ms)");
    c_fit->add_option("--g-scale", f_gs,
                      "conductance per unit pore density (S*m^2/pore)");
    add_unit_option(c_fit, "--vt", f_vt, "voltage",
                    "threshold hint; omit to estimate");
    add_unit_option(c_fit, "--noise", f_noise, "current",
                    "known observation-noise RMS of the traces");

    // simulate
    auto* c_sim =
        app.add_subcommand("simulate", "drive one device through a waveform CSV");
    add_common(c_sim, cf_sim, false);
    std::string waveform_csv, method = "rk4";
    c_sim->add_option("--waveform", waveform_csv, "input CSV (t_s,v_V)")
        ->required();
    c_sim->add_option("--method", method, "rk4 or euler");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }
        if (c_char->parsed())
            return cmd_characterize(cf_char, which, ch_v, ch_off, ch_pw, ch_ipi,
                                    ch_rate, ch_freq, ch_vmax, ch_dt);
        if (c_sonds->parsed())
            return cmd_sonds(cf_sonds, so_gamma, so_delta, so_hold);
        if (c_neuro->parsed())
            return cmd_neuro(cf_neuro, readout, nodes, kernel, epochs);
        if (c_grid->parsed()) return cmd_gridsearch(cf_grid, gp, dp, tp);
        if (c_fit->parsed())
            return cmd_fit(cf_fit, sweep_csv, decay_csv, f_vhigh, f_vlows, f_hh,
                           f_hl, f_gs, f_vt, f_noise);
        if (c_sim->parsed()) return cmd_simulate(cf_sim, waveform_csv, method);
    } catch (const memrc::invalid_input& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const memrc::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
