#include "bilin/narx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace bilin {

namespace {

double sample_std(const Vector& v, double mean) {
    if (v.size() < 2) return 0.0;
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

struct Sample {
    Vector x;
    double y;
};

// All valid lagged windows of a segment; the first usable index keeps every
// tap inside the segment.
void collect_samples(const TrainingSeries::Segment& seg, int n_u, int n_y,
                     std::vector<Sample>& out) {
    const Eigen::Index len = seg.u.size();
    const Eigen::Index t_min = std::max(n_u - 1, n_y);
    for (Eigen::Index t = t_min; t < len; ++t) {
        Sample s;
        s.x.resize(n_u + n_y);
        for (int i = 0; i < n_u; ++i) s.x(i) = seg.u(t - i);
        for (int i = 0; i < n_y; ++i) s.x(n_u + i) = seg.y(t - 1 - i);
        s.y = seg.y(t);
        out.push_back(std::move(s));
    }
}

struct ForwardCache {
    std::vector<Vector> activations;  // a_0 = x, ..., a_k
    std::vector<Vector> pre;          // z_1..z_k
};

double forward(const NarxModel& model, const Vector& x, ForwardCache* cache) {
    const bool tanh_act = model.activation == "tanh";
    Vector a = x;
    if (cache) {
        cache->activations.clear();
        cache->pre.clear();
        cache->activations.push_back(a);
    }
    const std::size_t k = model.layers.size();
    for (std::size_t l = 0; l < k; ++l) {
        Vector z = model.layers[l].W * a + model.layers[l].b;
        if (cache) cache->pre.push_back(z);
        if (l + 1 < k && tanh_act)
            a = z.array().tanh();
        else
            a = std::move(z);
        if (cache) cache->activations.push_back(a);
    }
    return a(0);
}

struct AdamState {
    std::vector<Matrix> mW, vW;
    std::vector<Vector> mb, vb;
    long step = 0;

    explicit AdamState(const NarxModel& model) {
        for (const auto& layer : model.layers) {
            mW.push_back(Matrix::Zero(layer.W.rows(), layer.W.cols()));
            vW.push_back(Matrix::Zero(layer.W.rows(), layer.W.cols()));
            mb.push_back(Vector::Zero(layer.b.size()));
            vb.push_back(Vector::Zero(layer.b.size()));
        }
    }
};

double evaluate_mse(const NarxModel& model, const std::vector<Sample>& samples,
                    const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i : idx) {
        double e = forward(model, samples[i].x, nullptr) - samples[i].y;
        sum += e * e;
    }
    return sum / static_cast<double>(idx.size());
}

}  // namespace

void NarxModel::validate() const {
    if (n_u < 1 || n_y < 0) throw std::invalid_argument("NarxModel: need n_u >= 1, n_y >= 0");
    if (layers.empty()) throw std::invalid_argument("NarxModel: no layers");
    if (layers.front().W.cols() != regressor_size())
        throw std::invalid_argument("NarxModel: first layer width must equal n_u + n_y");
    if (layers.back().W.rows() != 1)
        throw std::invalid_argument("NarxModel: output layer must be scalar");
    if (activation != "tanh" && activation != "identity")
        throw std::invalid_argument("NarxModel: unknown activation '" + activation + "'");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].b.size() != layers[l].W.rows())
            throw std::invalid_argument("NarxModel: bias/weight shape mismatch");
        if (l > 0 && layers[l].W.cols() != layers[l - 1].W.rows())
            throw std::invalid_argument("NarxModel: layer width mismatch");
        if (!layers[l].W.allFinite() || !layers[l].b.allFinite())
            throw std::invalid_argument("NarxModel: weights must be finite");
    }
}

double NarxModel::predict(const Vector& regressor) const {
    if (regressor.size() != regressor_size())
        throw std::invalid_argument("NarxModel::predict: regressor size mismatch");
    return forward(*this, regressor, nullptr);
}

void TrainConfig::validate() const {
    if (epochs < 0 || batch_size < 1 || patience < 1)
        throw std::invalid_argument("TrainConfig: epochs, batch_size, patience must be positive");
    if (!(learning_rate > 0.0) || !(lr_decay > 0.0))
        throw std::invalid_argument("TrainConfig: learning rate and decay must be positive");
    if (!(validation_fraction > 0.0) || !(validation_fraction < 1.0))
        throw std::invalid_argument("TrainConfig: validation fraction must lie in (0, 1)");
}

NarxHistory NarxHistory::zero(const NarxModel& model) {
    return NarxHistory{Vector::Zero(model.n_u - 1), Vector::Zero(model.n_y)};
}

DetrendResult detrend(const Vector& u, const Vector& y) {
    if (u.size() != y.size()) throw std::invalid_argument("detrend: sequences must match");
    if (u.size() < 2) throw std::invalid_argument("detrend: need at least two samples");

    TrendStats t;
    t.u_mean = u.mean();
    t.y_mean = y.mean();
    t.u_std = sample_std(u, t.u_mean);
    t.y_std = sample_std(y, t.y_mean);
    if (!(t.u_std > 0.0)) throw degenerate_signal_error("detrend: input signal is constant");
    if (!(t.y_std > 0.0)) throw degenerate_signal_error("detrend: output signal is constant");

    return DetrendResult{(u.array() - t.u_mean) / t.u_std, (y.array() - t.y_mean) / t.y_std, t};
}

TrainingSeries augment_zero_response(const Vector& u_n, const Vector& y_n, bool enabled) {
    if (u_n.size() != y_n.size())
        throw std::invalid_argument("augment_zero_response: sequences must match");
    TrainingSeries series;
    series.segments.push_back({u_n, y_n});
    if (enabled)
        series.segments.push_back({Vector::Zero(u_n.size()), Vector::Zero(y_n.size())});
    return series;
}

TrainResult train_narx(const TrainingSeries& series, int n_u, int n_y,
                       const std::vector<int>& hidden_widths, const TrainConfig& cfg) {
    cfg.validate();
    if (n_u < 1 || n_y < 0) throw std::invalid_argument("train_narx: need n_u >= 1, n_y >= 0");

    std::vector<Sample> samples;
    for (const auto& seg : series.segments) {
        if (seg.u.size() != seg.y.size())
            throw std::invalid_argument("train_narx: segment u/y length mismatch");
        collect_samples(seg, n_u, n_y, samples);
    }
    if (samples.size() < 2)
        throw std::invalid_argument("train_narx: sequences too short for the requested lags");

    std::mt19937_64 rng(cfg.seed);

    // Seeded uniform (Glorot-style) initialization.
    NarxModel model;
    model.n_u = n_u;
    model.n_y = n_y;
    std::vector<int> widths = hidden_widths;
    widths.push_back(1);
    Eigen::Index fan_in = n_u + n_y;
    for (int w : widths) {
        if (w < 1) throw std::invalid_argument("train_narx: layer widths must be positive");
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + w));
        std::uniform_real_distribution<double> dist(-limit, limit);
        NarxModel::Layer layer;
        layer.W.resize(w, fan_in);
        for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.W.cols(); ++j) layer.W(i, j) = dist(rng);
        layer.b = Vector::Zero(w);
        model.layers.push_back(std::move(layer));
        fan_in = w;
    }

    // Deterministic shuffle, validation slice from the tail.
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(order.size())));
    n_val = std::min(n_val, order.size() - 1);
    std::vector<std::size_t> val_idx(order.end() - static_cast<long>(n_val), order.end());
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<long>(n_val));

    AdamState adam(model);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    const std::size_t k = model.layers.size();
    const bool tanh_act = model.activation == "tanh";

    NarxModel best = model;
    double best_val = evaluate_mse(model, samples, val_idx);
    int best_epoch = 0;
    double lr = cfg.learning_rate;
    int epochs_run = 0;

    std::vector<Matrix> gW(k);
    std::vector<Vector> gb(k);
    ForwardCache cache;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);

        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const double inv_m = 1.0 / static_cast<double>(end - start);

            for (std::size_t l = 0; l < k; ++l) {
                gW[l] = Matrix::Zero(model.layers[l].W.rows(), model.layers[l].W.cols());
                gb[l] = Vector::Zero(model.layers[l].b.size());
            }

            for (std::size_t s = start; s < end; ++s) {
                const Sample& sample = samples[train_idx[s]];
                double pred = forward(model, sample.x, &cache);
                double err = pred - sample.y;

                Vector delta(1);
                delta(0) = 2.0 * err * inv_m;
                for (std::size_t l = k; l-- > 0;) {
                    gW[l] += delta * cache.activations[l].transpose();
                    gb[l] += delta;
                    if (l > 0) {
                        Vector back = model.layers[l].W.transpose() * delta;
                        if (tanh_act)
                            back.array() *= 1.0 - cache.activations[l].array().square();
                        delta = std::move(back);
                    }
                }
            }

            ++adam.step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
            for (std::size_t l = 0; l < k; ++l) {
                adam.mW[l] = beta1 * adam.mW[l] + (1.0 - beta1) * gW[l];
                adam.vW[l] = beta2 * adam.vW[l] + (1.0 - beta2) * gW[l].cwiseProduct(gW[l]);
                adam.mb[l] = beta1 * adam.mb[l] + (1.0 - beta1) * gb[l];
                adam.vb[l] = beta2 * adam.vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
                model.layers[l].W -=
                    lr * (adam.mW[l] / bc1)
                             .cwiseQuotient(((adam.vW[l] / bc2).cwiseSqrt().array() + adam_eps)
                                                .matrix());
                model.layers[l].b -=
                    lr * (adam.mb[l] / bc1)
                             .cwiseQuotient(((adam.vb[l] / bc2).cwiseSqrt().array() + adam_eps)
                                                .matrix());
                if (!model.layers[l].W.allFinite() || !model.layers[l].b.allFinite())
                    throw training_error("train_narx: loss diverged",
                                         static_cast<std::size_t>(epoch));
            }
        }

        epochs_run = epoch;
        lr *= cfg.lr_decay;

        double val = evaluate_mse(model, samples, val_idx);
        if (!std::isfinite(val))
            throw training_error("train_narx: validation loss is non-finite",
                                 static_cast<std::size_t>(epoch));
        if (val < best_val) {
            best_val = val;
            best = model;
            best_epoch = epoch;
        } else if (epoch - best_epoch >= cfg.patience) {
            break;
        }
    }

    TrainResult result;
    result.model = std::move(best);
    result.val_mse = best_val;
    result.train_mse = evaluate_mse(result.model, samples, train_idx);
    result.epochs_run = epochs_run;
    return result;
}

Vector narx_simulate(const NarxModel& model, const Vector& u_n, const NarxHistory& history,
                     NarxMode mode, const Vector* measured_y) {
    model.validate();
    if (history.u_past.size() != model.n_u - 1 || history.y_past.size() != model.n_y)
        throw std::invalid_argument("narx_simulate: history lengths must match the lags");
    if (mode == NarxMode::one_step) {
        if (!measured_y || measured_y->size() != u_n.size())
            throw std::invalid_argument("narx_simulate: one_step mode needs measured outputs");
    }

    const Eigen::Index K = u_n.size();
    Vector y(K);
    Vector x(model.regressor_size());
    for (Eigen::Index t = 0; t < K; ++t) {
        for (int i = 0; i < model.n_u; ++i) {
            Eigen::Index tap = t - i;
            x(i) = tap >= 0 ? u_n(tap) : history.u_past(-tap - 1);
        }
        for (int i = 0; i < model.n_y; ++i) {
            Eigen::Index tap = t - 1 - i;
            if (tap >= 0)
                x(model.n_u + i) = mode == NarxMode::one_step ? (*measured_y)(tap) : y(tap);
            else
                x(model.n_u + i) = history.y_past(-tap - 1);
        }
        double pred = forward(model, x, nullptr);
        if (!std::isfinite(pred))
            throw divergence_error("narx_simulate: non-finite prediction",
                                   static_cast<std::size_t>(t + 1));
        y(t) = pred;
    }
    return y;
}

DiscreteBilinearSystem denormalize_model(const DiscreteBilinearSystem& sys,
                                         const TrendStats& trend) {
    sys.validate();
    if (sys.drift || sys.y_offset != 0.0)
        throw std::invalid_argument("denormalize_model: model already carries drift/offset");
    if (!(trend.u_std > 0.0) || !(trend.y_std > 0.0))
        throw std::invalid_argument("denormalize_model: degenerate trend statistics");

    const double a = trend.u_mean / trend.u_std;
    DiscreteBilinearSystem out(sys.A - a * sys.N, sys.N / trend.u_std, sys.B / trend.u_std,
                               trend.y_std * sys.C);
    out.D = sys.D;
    out.x0 = sys.x0;
    out.y_offset = trend.y_mean;
    Vector drift = -a * sys.B;
    if (drift.cwiseAbs().maxCoeff() != 0.0 || trend.u_mean != 0.0) out.drift = drift;
    return out;
}

double mpe(const Vector& y_ref, const Vector& y_model) {
    if (y_ref.size() != y_model.size() || y_ref.size() < 1)
        throw std::invalid_argument("mpe: traces must have equal, positive length");
    double range = y_ref.maxCoeff() - y_ref.minCoeff();
    if (!(range > 0.0)) throw degenerate_signal_error("mpe: reference trace has zero range");
    return 100.0 * (y_ref - y_model).cwiseAbs().mean() / range;
}

}  // namespace bilin
