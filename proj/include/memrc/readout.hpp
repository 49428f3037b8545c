#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memrc/reservoir.hpp"

namespace memrc {

inline constexpr std::size_t kNumClasses = 4;

// Affine regression readout: prediction = states * weights + intercept.
struct LinearReadout {
    std::vector<double> weights;
    double intercept = 0.0;
};

// Gradient-descent settings shared by the FC and conv+FC readouts.
struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 2000;
    std::uint64_t seed = 0;
    double init_scale = 0.1;
    // stop early once the loss improves by less than early_stop_tol over
    // early_stop_window epochs
    double early_stop_tol = 1e-7;
    std::size_t early_stop_window = 50;

    void validate() const;
};

// Four independent sigmoid outputs over a flattened feature vector.
// Parameter count: 4*in_dim + 4.
struct FcReadout {
    std::size_t in_dim = 0;
    std::vector<double> w;  // kNumClasses * in_dim, class-major
    std::vector<double> b;  // kNumClasses

    std::size_t param_count() const { return w.size() + b.size(); }
};

// Single-channel valid 2-D convolution spanning all m device rows, then an
// FC-sigmoid output layer.  Parameter count: 4(n-f+1) + 4 + m*f + 1.
struct ConvFcReadout {
    std::size_t m = 0, n = 0, f = 0;
    std::vector<double> kernel;  // m * f, device-major
    double kernel_bias = 0.0;
    std::vector<double> w;  // kNumClasses * (n - f + 1)
    std::vector<double> b;  // kNumClasses

    std::size_t conv_out() const { return n - f + 1; }
    std::size_t param_count() const {
        return w.size() + b.size() + kernel.size() + 1;
    }
};

// Loss history of one training run.
struct TrainTrace {
    std::vector<double> loss;  // one entry per epoch run
    std::size_t epochs_run = 0;
    double final_loss = 0.0;
};

// Ordinary least squares with intercept via normal equations; falls back to
// ridge (lambda = 1e-10) on singularity, and raises naming the offending
// column if even that fails.
LinearReadout train_linear(const StateMatrix& states,
                           const std::vector<double>& targets);

std::vector<double> predict_linear(const LinearReadout& model,
                                   const StateMatrix& states);

// Mean binary cross-entropy over samples and the 4 sigmoid outputs.
double fc_loss(const FcReadout& model, const StateMatrix& features,
               const std::vector<int>& labels);
// Analytic gradient of fc_loss with respect to all parameters.
void fc_gradients(const FcReadout& model, const StateMatrix& features,
                  const std::vector<int>& labels, FcReadout& grad);

double convfc_loss(const ConvFcReadout& model,
                   const std::vector<FeatureBlock>& features,
                   const std::vector<int>& labels);
void convfc_gradients(const ConvFcReadout& model,
                      const std::vector<FeatureBlock>& features,
                      const std::vector<int>& labels, ConvFcReadout& grad);

// Full-batch gradient descent on mean BCE; deterministic given cfg.seed.
FcReadout train_fc(const StateMatrix& features, const std::vector<int>& labels,
                   const TrainConfig& cfg, TrainTrace* trace = nullptr);

ConvFcReadout train_convfc(const std::vector<FeatureBlock>& features,
                           const std::vector<int>& labels, std::size_t m,
                           std::size_t n, std::size_t f, const TrainConfig& cfg,
                           TrainTrace* trace = nullptr);

// Argmax of the four output activations; ties break to the lowest index.
int classify(const FcReadout& model, const std::vector<double>& features);
int classify(const ConvFcReadout& model, const FeatureBlock& features);

// Closed-form parameter counts.
std::size_t fc_param_count(std::size_t nm);
std::size_t convfc_param_count(std::size_t m, std::size_t n, std::size_t f);

// JSON (de)serialization: architecture descriptor + flat parameter arrays
// + training metadata.
void save_linear(const LinearReadout& model, const std::string& path);
void save_fc(const FcReadout& model, const TrainConfig& cfg,
             const TrainTrace& trace, const std::string& path);
void save_convfc(const ConvFcReadout& model, const TrainConfig& cfg,
                 const TrainTrace& trace, const std::string& path);
FcReadout load_fc(const std::string& path);
ConvFcReadout load_convfc(const std::string& path);

}  // namespace memrc
