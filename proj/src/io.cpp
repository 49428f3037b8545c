#include "memrc/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "memrc/errors.hpp"

namespace memrc {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_input("cannot open '" + path + "' for writing");
    out.precision(12);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("cannot open '" + path + "' for reading");
    return in;
}

std::vector<double> parse_row(const std::string& line, std::size_t n_fields,
                              const std::string& path, std::size_t row) {
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            fields.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw invalid_input(path + ": row " + std::to_string(row) +
                                ": cannot parse '" + cell + "'");
        }
    }
    if (fields.size() != n_fields)
        throw invalid_input(path + ": row " + std::to_string(row) +
                            ": expected " + std::to_string(n_fields) +
                            " fields, got " + std::to_string(fields.size()));
    return fields;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace

void write_trace_csv(const IvTrace& trace, const std::string& path) {
    trace.validate();
    std::ofstream out = open_out(path);
    out << "t_s,v_V,i_A\n";
    for (std::size_t k = 0; k < trace.t.size(); ++k)
        out << trace.t[k] << ',' << trace.v[k] << ',' << trace.i[k] << '\n';
}

IvTrace read_trace_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t_s,v_V,i_A", 0) != 0)
        throw invalid_input(path + ": row 1: expected header t_s,v_V,i_A");
    IvTrace trace;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<double> f = parse_row(line, 3, path, row);
        trace.t.push_back(f[0]);
        trace.v.push_back(f[1]);
        trace.i.push_back(f[2]);
    }
    if (trace.t.empty()) throw invalid_input(path + ": no data rows");
    trace.validate();
    return trace;
}

void write_waveform_csv(const VoltageWaveform& w, const std::string& path) {
    w.validate();
    std::ofstream out = open_out(path);
    out << "t_s,v_V\n";
    for (std::size_t k = 0; k < w.v.size(); ++k)
        out << static_cast<double>(k + 1) * w.dt << ',' << w.v[k] << '\n';
}

void write_sonds_csv(const SondsDataset& dataset, const std::string& path) {
    if (dataset.u.size() != dataset.y.size())
        throw invalid_input("sonds csv: u/y length mismatch");
    std::ofstream out = open_out(path);
    out << "k,u,y\n";
    for (std::size_t k = 0; k < dataset.u.size(); ++k)
        out << k << ',' << dataset.u[k] << ',' << dataset.y[k] << '\n';
}

SondsDataset read_sonds_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("k,u,y", 0) != 0)
        throw invalid_input(path + ": row 1: expected header k,u,y");
    SondsDataset dataset;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<double> f = parse_row(line, 3, path, row);
        dataset.u.push_back(f[1]);
        dataset.y.push_back(f[2]);
    }
    if (dataset.u.empty()) throw invalid_input(path + ": no data rows");
    return dataset;
}

void write_state_csv(const StateMatrix& matrix, const std::string& path) {
    std::ofstream out = open_out(path);
    for (std::size_t c = 0; c < matrix.cols; ++c) {
        if (c) out << ',';
        out << (c < matrix.col_names.size() ? matrix.col_names[c]
                                            : "col" + std::to_string(c));
    }
    out << '\n';
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        for (std::size_t c = 0; c < matrix.cols; ++c) {
            if (c) out << ',';
            out << matrix.at(r, c);
        }
        out << '\n';
    }
}

void write_prediction_csv(const std::vector<double>& predicted,
                          const std::vector<double>& target,
                          const std::string& path) {
    if (predicted.size() != target.size())
        throw invalid_input("prediction csv: length mismatch");
    std::ofstream out = open_out(path);
    out << "k,predicted,target\n";
    for (std::size_t k = 0; k < predicted.size(); ++k)
        out << k << ',' << predicted[k] << ',' << target[k] << '\n';
}

void write_grid_csv(const std::vector<GridCell>& cells,
                    const std::string& path) {
    std::ofstream out = open_out(path);
    out << "gamma_V,delta_V,dt_s,nmse_train,nmse_test,error\n";
    for (const GridCell& c : cells) {
        out << c.gamma << ',' << c.delta << ',' << c.dt_hold << ',';
        if (c.failed())
            out << ",," << '"' << c.error << '"';
        else
            out << c.nmse_train << ',' << c.nmse_test << ',';
        out << '\n';
    }
}

void write_loss_csv(const std::vector<double>& loss, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "epoch,loss\n";
    for (std::size_t k = 0; k < loss.size(); ++k)
        out << k << ',' << loss[k] << '\n';
}

void write_confusion_json(const ConfusionMatrix& matrix,
                          const std::string& path) {
    nlohmann::json j;
    std::vector<std::string> classes;
    for (std::size_t c = 0; c < kNumClasses; ++c)
        classes.push_back(to_string(static_cast<NeuralClass>(c)));
    j["classes"] = classes;
    j["counts"] = matrix.counts;
    j["total"] = matrix.total();
    j["accuracy"] = matrix.accuracy();
    write_json(j, path);
}

void write_fit_report_json(const DeviceFitReport& report,
                           const std::string& path) {
    const DeviceParams& p = report.params;
    nlohmann::json j;
    j["params"] = {{"label", p.label},   {"n0", p.n0},
                   {"ve", p.ve},         {"tau01", p.tau01},
                   {"vtau1", p.vtau1},   {"tau02", p.tau02},
                   {"vtau2", p.vtau2},   {"vt", p.vt},
                   {"g_scale", p.g_scale}};
    j["residuals"] = {{"steady_state", report.ss_residual},
                      {"tau_sub", report.tau_residual_sub},
                      {"tau_supra", report.tau_residual_supra}};
    nlohmann::json points = nlohmann::json::array();
    for (const auto& [v, tau] : report.tau_points)
        points.push_back({{"v_V", v}, {"tau_s", tau}});
    j["tau_points"] = points;
    write_json(j, path);
}

}  // namespace memrc
