#pragma once

// NARX surrogate modeling: detrending, zero-response augmentation, a small
// feedforward network trained by backpropagation on lagged regressors,
// closed-loop simulation, and the affine de-normalization that maps a model
// identified on normalized data back to physical units.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "bilin/system.hpp"

namespace bilin {

struct TrendStats {
    double u_mean = 0.0;
    double u_std = 1.0;
    double y_mean = 0.0;
    double y_std = 1.0;
};

struct DetrendResult {
    Vector u;
    Vector y;
    TrendStats trend;
};

// Normalized i/o data split into segments; lagged training windows are
// drawn within a segment only, never across a seam.
struct TrainingSeries {
    struct Segment {
        Vector u;
        Vector y;
    };
    std::vector<Segment> segments;
};

// Lagged feedforward network: regressor [u(t)..u(t-n_u+1), y(t-1)..y(t-n_y)]
// through dense layers (named activation on hidden layers, identity scalar
// output).
struct NarxModel {
    struct Layer {
        Matrix W;
        Vector b;
    };

    int n_u = 1;  // input taps, current plus past
    int n_y = 1;  // past-output taps
    std::vector<Layer> layers;
    std::string activation = "tanh";  // "tanh" or "identity"
    TrendStats trend;

    Eigen::Index regressor_size() const { return n_u + n_y; }
    double predict(const Vector& regressor) const;
    void validate() const;
};

struct TrainConfig {
    int epochs = 500;
    int batch_size = 64;
    double learning_rate = 1e-2;
    double lr_decay = 1.0;  // multiplicative per epoch
    std::uint64_t seed = 0;
    double validation_fraction = 0.2;
    int patience = 60;  // epochs without validation improvement before stopping

    void validate() const;
};

struct TrainResult {
    NarxModel model;
    double train_mse = 0.0;
    double val_mse = 0.0;
    int epochs_run = 0;
};

// Lag buffers immediately before the simulated window, most recent first.
// u_past has length n_u - 1, y_past length n_y.
struct NarxHistory {
    Vector u_past;
    Vector y_past;

    static NarxHistory zero(const NarxModel& model);
};

enum class NarxMode { one_step, closed_loop };

// Normalize to zero mean, unit sample standard deviation (divisor n-1).
DetrendResult detrend(const Vector& u, const Vector& y);

// Appends a zero-input/zero-output segment of equal length as a separate
// segment, so the network also learns the zero response.
TrainingSeries augment_zero_response(const Vector& u_n, const Vector& y_n, bool enabled = true);

// Minimizes mean squared one-step (series-parallel) error with a seeded
// adaptive-moment gradient method and early stopping on validation MSE.
// hidden_widths lists the hidden layers; the scalar output layer is implied.
TrainResult train_narx(const TrainingSeries& series, int n_u, int n_y,
                       const std::vector<int>& hidden_widths, const TrainConfig& cfg);

// closed_loop feeds predictions back into the output lags; one_step takes
// the measured outputs (which must then be supplied).
Vector narx_simulate(const NarxModel& model, const Vector& u_n, const NarxHistory& history,
                     NarxMode mode, const Vector* measured_y = nullptr);

// Rewrites a model identified on normalized signals in physical units:
// u_n = (u - u_mean)/u_std, y = y_std * y_n + y_mean induce an affine
// bilinear model with drift and output offset.
DiscreteBilinearSystem denormalize_model(const DiscreteBilinearSystem& sys,
                                         const TrendStats& trend);

// Mean percentage error: 100 * mean|y_ref - y_model| / range(y_ref).
double mpe(const Vector& y_ref, const Vector& y_model);

}  // namespace bilin
