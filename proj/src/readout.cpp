#include "memrc/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "memrc/errors.hpp"

namespace memrc {

namespace {

using nlohmann::json;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// BCE from the logit, numerically stable for either sign.
double bce_from_logit(double z, double target) {
    return std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
}

// Cholesky solve of M x = rhs; returns the failing pivot index or -1.
int cholesky_solve(std::vector<double>& m, std::vector<double>& rhs,
                   std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = m[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= m[j * n + k] * m[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) return static_cast<int>(j);
        const double l = std::sqrt(d);
        m[j * n + j] = l;
        for (std::size_t r = j + 1; r < n; ++r) {
            double s = m[r * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= m[r * n + k] * m[j * n + k];
            m[r * n + j] = s / l;
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        double s = rhs[r];
        for (std::size_t k = 0; k < r; ++k) s -= m[r * n + k] * rhs[k];
        rhs[r] = s / m[r * n + r];
    }
    for (std::size_t ri = n; ri-- > 0;) {
        double s = rhs[ri];
        for (std::size_t k = ri + 1; k < n; ++k) s -= m[k * n + ri] * rhs[k];
        rhs[ri] = s / m[ri * n + ri];
    }
    return -1;
}

void check_labels(const std::vector<int>& labels, std::size_t rows) {
    if (labels.size() != rows)
        throw invalid_input("readout: label count does not match features");
    for (int l : labels)
        if (l < 0 || l >= static_cast<int>(kNumClasses))
            throw invalid_input("readout: label out of range");
}

std::vector<double> init_params(std::size_t count, std::mt19937_64& rng,
                                double scale) {
    std::uniform_real_distribution<double> uni(-scale, scale);
    std::vector<double> out(count);
    for (double& x : out) x = uni(rng);
    return out;
}

// Shared epoch loop: evaluates loss/gradient via callbacks over a flat
// parameter vector.
template <typename LossGrad>
TrainTrace descend(std::vector<double>& params, const TrainConfig& cfg,
                   LossGrad&& loss_grad) {
    TrainTrace trace;
    std::vector<double> grad(params.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const double loss = loss_grad(params, grad);
        if (!std::isfinite(loss))
            throw numerical_error("training diverged at epoch " +
                                  std::to_string(epoch));
        trace.loss.push_back(loss);
        for (std::size_t j = 0; j < params.size(); ++j)
            params[j] -= cfg.learning_rate * grad[j];
        if (epoch >= cfg.early_stop_window &&
            trace.loss[epoch - cfg.early_stop_window] - loss <
                cfg.early_stop_tol)
            break;
    }
    trace.epochs_run = trace.loss.size();
    trace.final_loss = trace.loss.empty() ? 0.0 : trace.loss.back();
    return trace;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0))
        throw invalid_input("train config: learning_rate must be > 0");
    if (epochs < 1) throw invalid_input("train config: epochs must be >= 1");
    if (!(init_scale >= 0.0))
        throw invalid_input("train config: init_scale must be >= 0");
}

LinearReadout train_linear(const StateMatrix& states,
                           const std::vector<double>& targets) {
    const std::size_t r = states.rows, c = states.cols;
    if (targets.size() != r)
        throw invalid_input("train_linear: target count mismatch");
    if (r < c + 1)
        throw invalid_input("train_linear: need rows >= cols + 1");

    // normal equations over [X 1]
    const std::size_t n = c + 1;
    std::vector<double> m(n * n, 0.0), rhs(n, 0.0);
    for (std::size_t row = 0; row < r; ++row) {
        for (std::size_t a = 0; a < c; ++a) {
            const double xa = states.at(row, a);
            for (std::size_t b = a; b < c; ++b)
                m[a * n + b] += xa * states.at(row, b);
            m[a * n + c] += xa;
            rhs[a] += xa * targets[row];
        }
        m[c * n + c] += 1.0;
        rhs[c] += targets[row];
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < a; ++b) m[a * n + b] = m[b * n + a];

    std::vector<double> chol = m, sol = rhs;
    int pivot = cholesky_solve(chol, sol, n);
    if (pivot >= 0) {
        // ridge fallback
        chol = m;
        sol = rhs;
        for (std::size_t j = 0; j < n; ++j) chol[j * n + j] += 1e-10;
        pivot = cholesky_solve(chol, sol, n);
        if (pivot >= 0) {
            const std::string name =
                static_cast<std::size_t>(pivot) < states.col_names.size()
                    ? states.col_names[pivot]
                    : "column " + std::to_string(pivot);
            throw numerical_error(
                "train_linear: singular fit beyond ridge fallback at " + name);
        }
    }
    LinearReadout model;
    model.weights.assign(sol.begin(), sol.begin() + c);
    model.intercept = sol[c];
    return model;
}

std::vector<double> predict_linear(const LinearReadout& model,
                                   const StateMatrix& states) {
    if (states.cols != model.weights.size())
        throw invalid_input("predict_linear: column count mismatch");
    std::vector<double> out(states.rows);
    for (std::size_t r = 0; r < states.rows; ++r) {
        double y = model.intercept;
        for (std::size_t c = 0; c < states.cols; ++c)
            y += model.weights[c] * states.at(r, c);
        out[r] = y;
    }
    return out;
}

double fc_loss(const FcReadout& model, const StateMatrix& features,
               const std::vector<int>& labels) {
    check_labels(labels, features.rows);
    if (features.cols != model.in_dim)
        throw invalid_input("fc_loss: feature dimension mismatch");
    double loss = 0.0;
    for (std::size_t r = 0; r < features.rows; ++r) {
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            double z = model.b[c];
            for (std::size_t j = 0; j < model.in_dim; ++j)
                z += model.w[c * model.in_dim + j] * features.at(r, j);
            loss += bce_from_logit(z, labels[r] == static_cast<int>(c) ? 1.0 : 0.0);
        }
    }
    return loss / static_cast<double>(features.rows * kNumClasses);
}

void fc_gradients(const FcReadout& model, const StateMatrix& features,
                  const std::vector<int>& labels, FcReadout& grad) {
    check_labels(labels, features.rows);
    grad.in_dim = model.in_dim;
    grad.w.assign(model.w.size(), 0.0);
    grad.b.assign(model.b.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(features.rows * kNumClasses);
    for (std::size_t r = 0; r < features.rows; ++r) {
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            double z = model.b[c];
            for (std::size_t j = 0; j < model.in_dim; ++j)
                z += model.w[c * model.in_dim + j] * features.at(r, j);
            const double t = labels[r] == static_cast<int>(c) ? 1.0 : 0.0;
            const double dz = (sigmoid(z) - t) * inv;
            grad.b[c] += dz;
            for (std::size_t j = 0; j < model.in_dim; ++j)
                grad.w[c * model.in_dim + j] += dz * features.at(r, j);
        }
    }
}

double convfc_loss(const ConvFcReadout& model,
                   const std::vector<FeatureBlock>& features,
                   const std::vector<int>& labels) {
    check_labels(labels, features.size());
    const std::size_t L = model.conv_out();
    double loss = 0.0;
    std::vector<double> u(L);
    for (std::size_t r = 0; r < features.size(); ++r) {
        const FeatureBlock& x = features[r];
        if (x.m != model.m || x.n != model.n)
            throw invalid_input("convfc_loss: block shape mismatch");
        for (std::size_t j = 0; j < L; ++j) {
            double s = model.kernel_bias;
            for (std::size_t d = 0; d < model.m; ++d)
                for (std::size_t i = 0; i < model.f; ++i)
                    s += model.kernel[d * model.f + i] * x.at(d, j + i);
            u[j] = s;
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            double z = model.b[c];
            for (std::size_t j = 0; j < L; ++j) z += model.w[c * L + j] * u[j];
            loss += bce_from_logit(z, labels[r] == static_cast<int>(c) ? 1.0 : 0.0);
        }
    }
    return loss / static_cast<double>(features.size() * kNumClasses);
}

void convfc_gradients(const ConvFcReadout& model,
                      const std::vector<FeatureBlock>& features,
                      const std::vector<int>& labels, ConvFcReadout& grad) {
    check_labels(labels, features.size());
    grad.m = model.m;
    grad.n = model.n;
    grad.f = model.f;
    grad.kernel.assign(model.kernel.size(), 0.0);
    grad.kernel_bias = 0.0;
    grad.w.assign(model.w.size(), 0.0);
    grad.b.assign(model.b.size(), 0.0);
    const std::size_t L = model.conv_out();
    const double inv =
        1.0 / static_cast<double>(features.size() * kNumClasses);
    std::vector<double> u(L), du(L);
    for (std::size_t r = 0; r < features.size(); ++r) {
        const FeatureBlock& x = features[r];
        for (std::size_t j = 0; j < L; ++j) {
            double s = model.kernel_bias;
            for (std::size_t d = 0; d < model.m; ++d)
                for (std::size_t i = 0; i < model.f; ++i)
                    s += model.kernel[d * model.f + i] * x.at(d, j + i);
            u[j] = s;
        }
        std::fill(du.begin(), du.end(), 0.0);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            double z = model.b[c];
            for (std::size_t j = 0; j < L; ++j) z += model.w[c * L + j] * u[j];
            const double t = labels[r] == static_cast<int>(c) ? 1.0 : 0.0;
            const double dz = (sigmoid(z) - t) * inv;
            grad.b[c] += dz;
            for (std::size_t j = 0; j < L; ++j) {
                grad.w[c * L + j] += dz * u[j];
                du[j] += model.w[c * L + j] * dz;
            }
        }
        for (std::size_t j = 0; j < L; ++j) {
            grad.kernel_bias += du[j];
            for (std::size_t d = 0; d < model.m; ++d)
                for (std::size_t i = 0; i < model.f; ++i)
                    grad.kernel[d * model.f + i] += du[j] * x.at(d, j + i);
        }
    }
}

FcReadout train_fc(const StateMatrix& features, const std::vector<int>& labels,
                   const TrainConfig& cfg, TrainTrace* trace) {
    cfg.validate();
    check_labels(labels, features.rows);
    FcReadout model;
    model.in_dim = features.cols;
    std::mt19937_64 rng(cfg.seed);
    model.w = init_params(kNumClasses * model.in_dim, rng, cfg.init_scale);
    model.b = init_params(kNumClasses, rng, cfg.init_scale);

    std::vector<double> params;
    params.reserve(model.param_count());
    params.insert(params.end(), model.w.begin(), model.w.end());
    params.insert(params.end(), model.b.begin(), model.b.end());

    FcReadout scratch = model, g;
    auto loss_grad = [&](const std::vector<double>& p, std::vector<double>& out) {
        std::copy(p.begin(), p.begin() + scratch.w.size(), scratch.w.begin());
        std::copy(p.begin() + scratch.w.size(), p.end(), scratch.b.begin());
        fc_gradients(scratch, features, labels, g);
        std::copy(g.w.begin(), g.w.end(), out.begin());
        std::copy(g.b.begin(), g.b.end(), out.begin() + g.w.size());
        return fc_loss(scratch, features, labels);
    };
    const TrainTrace t = descend(params, cfg, loss_grad);
    std::copy(params.begin(), params.begin() + model.w.size(), model.w.begin());
    std::copy(params.begin() + model.w.size(), params.end(), model.b.begin());
    if (trace) *trace = t;
    return model;
}

ConvFcReadout train_convfc(const std::vector<FeatureBlock>& features,
                           const std::vector<int>& labels, std::size_t m,
                           std::size_t n, std::size_t f, const TrainConfig& cfg,
                           TrainTrace* trace) {
    cfg.validate();
    if (f > n) throw invalid_input("train_convfc: kernel length f must be <= n");
    if (f < 1 || m < 1) throw invalid_input("train_convfc: bad kernel shape");
    check_labels(labels, features.size());

    ConvFcReadout model;
    model.m = m;
    model.n = n;
    model.f = f;
    std::mt19937_64 rng(cfg.seed);
    model.kernel = init_params(m * f, rng, cfg.init_scale);
    model.kernel_bias = init_params(1, rng, cfg.init_scale)[0];
    model.w = init_params(kNumClasses * model.conv_out(), rng, cfg.init_scale);
    model.b = init_params(kNumClasses, rng, cfg.init_scale);

    // flat layout: kernel, kernel_bias, w, b
    std::vector<double> params;
    params.reserve(model.param_count());
    params.insert(params.end(), model.kernel.begin(), model.kernel.end());
    params.push_back(model.kernel_bias);
    params.insert(params.end(), model.w.begin(), model.w.end());
    params.insert(params.end(), model.b.begin(), model.b.end());

    ConvFcReadout scratch = model, g;
    auto unpack = [&](const std::vector<double>& p, ConvFcReadout& dst) {
        auto it = p.begin();
        std::copy(it, it + dst.kernel.size(), dst.kernel.begin());
        it += dst.kernel.size();
        dst.kernel_bias = *it++;
        std::copy(it, it + dst.w.size(), dst.w.begin());
        it += dst.w.size();
        std::copy(it, it + dst.b.size(), dst.b.begin());
    };
    auto loss_grad = [&](const std::vector<double>& p, std::vector<double>& out) {
        unpack(p, scratch);
        convfc_gradients(scratch, features, labels, g);
        auto it = out.begin();
        it = std::copy(g.kernel.begin(), g.kernel.end(), it);
        *it++ = g.kernel_bias;
        it = std::copy(g.w.begin(), g.w.end(), it);
        std::copy(g.b.begin(), g.b.end(), it);
        return convfc_loss(scratch, features, labels);
    };
    const TrainTrace t = descend(params, cfg, loss_grad);
    unpack(params, model);
    if (trace) *trace = t;
    return model;
}

int classify(const FcReadout& model, const std::vector<double>& features) {
    if (features.size() != model.in_dim)
        throw invalid_input("classify: feature dimension mismatch");
    int best = 0;
    double best_z = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        double z = model.b[c];
        for (std::size_t j = 0; j < model.in_dim; ++j)
            z += model.w[c * model.in_dim + j] * features[j];
        if (z > best_z) {  // strict: ties keep the lower index
            best_z = z;
            best = static_cast<int>(c);
        }
    }
    return best;
}

int classify(const ConvFcReadout& model, const FeatureBlock& features) {
    if (features.m != model.m || features.n != model.n)
        throw invalid_input("classify: block shape mismatch");
    const std::size_t L = model.conv_out();
    std::vector<double> u(L);
    for (std::size_t j = 0; j < L; ++j) {
        double s = model.kernel_bias;
        for (std::size_t d = 0; d < model.m; ++d)
            for (std::size_t i = 0; i < model.f; ++i)
                s += model.kernel[d * model.f + i] * features.at(d, j + i);
        u[j] = s;
    }
    int best = 0;
    double best_z = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        double z = model.b[c];
        for (std::size_t j = 0; j < L; ++j) z += model.w[c * L + j] * u[j];
        if (z > best_z) {
            best_z = z;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::size_t fc_param_count(std::size_t nm) { return 4 * nm + 4; }

std::size_t convfc_param_count(std::size_t m, std::size_t n, std::size_t f) {
    if (f > n) throw invalid_input("convfc_param_count: f must be <= n");
    return 4 * (n - f + 1) + 4 + m * f + 1;
}

namespace {

json train_meta(const TrainConfig& cfg, const TrainTrace& trace) {
    return {{"seed", cfg.seed},
            {"learning_rate", cfg.learning_rate},
            {"epochs_run", trace.epochs_run},
            {"final_loss", trace.final_loss}};
}

void dump(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_input("cannot write model file '" + path + "'");
    out << doc.dump(2) << "\n";
}

json load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("cannot open model file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw invalid_input("model file '" + path + "': " + e.what());
    }
    return doc;
}

}  // namespace

void save_linear(const LinearReadout& model, const std::string& path) {
    dump({{"arch", "linear"},
          {"weights", model.weights},
          {"intercept", model.intercept},
          {"param_count", model.weights.size() + 1}},
         path);
}

void save_fc(const FcReadout& model, const TrainConfig& cfg,
             const TrainTrace& trace, const std::string& path) {
    dump({{"arch", "fc"},
          {"in_dim", model.in_dim},
          {"w", model.w},
          {"b", model.b},
          {"param_count", model.param_count()},
          {"training", train_meta(cfg, trace)}},
         path);
}

void save_convfc(const ConvFcReadout& model, const TrainConfig& cfg,
                 const TrainTrace& trace, const std::string& path) {
    dump({{"arch", "convfc"},
          {"m", model.m},
          {"n", model.n},
          {"f", model.f},
          {"kernel", model.kernel},
          {"kernel_bias", model.kernel_bias},
          {"w", model.w},
          {"b", model.b},
          {"param_count", model.param_count()},
          {"training", train_meta(cfg, trace)}},
         path);
}

FcReadout load_fc(const std::string& path) {
    const json doc = load(path);
    FcReadout model;
    try {
        model.in_dim = doc.at("in_dim").get<std::size_t>();
        model.w = doc.at("w").get<std::vector<double>>();
        model.b = doc.at("b").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw invalid_input("model file '" + path + "': " + e.what());
    }
    if (model.w.size() != kNumClasses * model.in_dim ||
        model.b.size() != kNumClasses)
        throw invalid_input("model file '" + path + "': inconsistent shapes");
    return model;
}

ConvFcReadout load_convfc(const std::string& path) {
    const json doc = load(path);
    ConvFcReadout model;
    try {
        model.m = doc.at("m").get<std::size_t>();
        model.n = doc.at("n").get<std::size_t>();
        model.f = doc.at("f").get<std::size_t>();
        model.kernel = doc.at("kernel").get<std::vector<double>>();
        model.kernel_bias = doc.at("kernel_bias").get<double>();
        model.w = doc.at("w").get<std::vector<double>>();
        model.b = doc.at("b").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw invalid_input("model file '" + path + "': " + e.what());
    }
    if (model.f > model.n || model.kernel.size() != model.m * model.f ||
        model.w.size() != kNumClasses * model.conv_out() ||
        model.b.size() != kNumClasses)
        throw invalid_input("model file '" + path + "': inconsistent shapes");
    return model;
}

}  // namespace memrc
