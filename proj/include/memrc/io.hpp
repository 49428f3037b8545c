#pragma once

#include <string>
#include <vector>

#include "memrc/characterize.hpp"
#include "memrc/metrics.hpp"
#include "memrc/reservoir.hpp"
#include "memrc/tasks.hpp"
#include "memrc/waveform.hpp"

namespace memrc {

// CSV trace format, header `t_s,v_V,i_A`.
void write_trace_csv(const IvTrace& trace, const std::string& path);
IvTrace read_trace_csv(const std::string& path);

// `t_s,v_V` waveform export.
void write_waveform_csv(const VoltageWaveform& w, const std::string& path);

// `k,u,y` dataset export/import.
void write_sonds_csv(const SondsDataset& dataset, const std::string& path);
SondsDataset read_sonds_csv(const std::string& path);

// Header row names columns (`dev<label>_n<j>`).
void write_state_csv(const StateMatrix& matrix, const std::string& path);

// `k,predicted,target` rows.
void write_prediction_csv(const std::vector<double>& predicted,
                          const std::vector<double>& target,
                          const std::string& path);

// `gamma_V,delta_V,dt_s,nmse_train,nmse_test` rows (failed cells report
// an error column instead of numbers).
void write_grid_csv(const std::vector<GridCell>& cells,
                    const std::string& path);

// `epoch,loss` rows.
void write_loss_csv(const std::vector<double>& loss, const std::string& path);

// Confusion matrix JSON: class names, count table, accuracy.
void write_confusion_json(const ConfusionMatrix& matrix,
                          const std::string& path);

// Fit report JSON: parameter names matching the device model fields, plus
// residuals and the extracted tau(v) points.
void write_fit_report_json(const DeviceFitReport& report,
                           const std::string& path);

}  // namespace memrc
