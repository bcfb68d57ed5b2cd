#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wavelat/dataset.hpp"
#include "wavelat/nn.hpp"
#include "wavelat/spectral.hpp"

namespace wavelat {

// Composite-objective training configuration. Training tensors are float;
// the stopband loss and every lattice computation stay in double.
struct TrainConfig {
    std::string arch = "wavelet";  // "wavelet" or "average"
    std::string wavelet = "db2";   // initial filter bank
    double alpha = 0.0;            // stopband weight in [0, 1]
    double lr = 0.05;
    double momentum = 0.9;
    int epochs = 30;
    int batch_size = 32;
    std::uint64_t seed = 7;
    SpectralGrid grid = default_lowpass_grid();
    DatasetConfig data;

    void validate() const;  // throws ConfigError
};

struct EpochMetrics {
    int epoch = 0;  // 1-based
    double l_ce = 0.0;
    double l_sbe = 0.0;
    double l_total = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct TrainResult {
    ToyNet<float> net;
    TrainConfig config;
    std::vector<EpochMetrics> history;
    std::vector<double> unit_sbe;  // final per-unit stopband loss; empty for "average"
};

struct EvalReport {
    int samples = 0;
    double accuracy = 0.0;
    std::vector<double> per_class;             // recall per true class
    std::vector<std::vector<int>> confusion;   // [true][predicted]
};

// Trains a fresh network on a freshly generated dataset. Bit-identical for
// identical configs: all randomness flows from cfg.seed and cfg.data.seed,
// and every reduction runs single-threaded in a fixed order.
TrainResult train_model(const TrainConfig& cfg);

// Same, but reuses an existing dataset (the sweep path).
TrainResult train_model(const TrainConfig& cfg, const TextureDataset& data);

EvalReport evaluate(const ToyNet<float>& net, const TextureDataset& data,
                    std::span<const int> indices);

// Retrains the same architecture and data at each alpha. Throws ConfigError
// for an alpha outside [0, 1]; an empty list yields an empty result.
std::vector<TrainResult> alpha_sweep(const TrainConfig& base, std::span<const double> alphas);

// Final per-unit stopband losses of a trained network (empty for "average").
std::vector<double> unit_stopband_losses(const ToyNet<float>& net, const SpectralGrid& grid);

struct BatchStats {
    double ce = 0.0;     // mean task loss over the batch
    double sbe = 0.0;    // mean stopband loss over the network's units
    double total = 0.0;  // (1 - alpha) * ce + alpha * sbe
    int correct = 0;
    int count = 0;
};

// Forward (and optionally backward) pass of the composite objective over one
// batch. With `with_backward`, parameter gradients accumulate onto the net:
// the task term scaled by (1 - alpha) / batch, the stopband term by
// alpha / unit count. Templated so gradient checks can run fully in double.
template <typename T>
BatchStats composite_batch(ToyNet<T>& net, const TextureDataset& data,
                           std::span<const int> indices, double alpha,
                           const SpectralGrid& grid, bool with_backward) {
    if (indices.empty()) throw DataError("composite_batch: empty batch");
    BatchStats stats;
    stats.count = static_cast<int>(indices.size());
    const T ce_scale = static_cast<T>((1.0 - alpha) / stats.count);

    for (int idx : indices) {
        if (idx < 0 || idx >= data.size()) throw DataError("composite_batch: index out of range");
        const Tensor3<T> x = tensor_cast<T>(data.images[idx]);
        const int label = data.labels[idx];
        if (with_backward) {
            ToyNetCache<T> cache;
            const std::vector<T> logits = toynet_forward(net, x, &cache);
            SoftmaxCE<T> ce = softmax_cross_entropy<T>(logits, label);
            stats.ce += ce.loss;
            if (ce.predicted == label) ++stats.correct;
            for (T& g : ce.dlogits) g *= ce_scale;
            toynet_backward(net, cache, std::span<const T>(ce.dlogits));
        } else {
            const std::vector<T> logits = toynet_forward<T>(net, x, nullptr);
            const SoftmaxCE<T> ce = softmax_cross_entropy<T>(logits, label);
            stats.ce += ce.loss;
            if (ce.predicted == label) ++stats.correct;
        }
    }
    stats.ce /= stats.count;

    if (net.has_units()) {
        double acc = 0.0;
        for (const AngleParameter<T>* ap : net.unit_angles()) {
            std::vector<double> a(ap->value.begin(), ap->value.end());
            acc += sbe_loss(lattice_to_filters(LatticeAngles(std::move(a))).h0, grid);
        }
        stats.sbe = acc / 3.0;
        if (with_backward && alpha > 0.0) {
            WaveletUnit<T>* units[] = {&net.unit_pool, &net.unit_main, &net.unit_shortcut};
            for (WaveletUnit<T>* u : units) {
                std::vector<double> a(u->angles->value.begin(), u->angles->value.end());
                const std::vector<double> g = sbe_loss_gradient(LatticeAngles(std::move(a)), grid);
                for (size_t m = 0; m < g.size(); ++m)
                    u->angles->grad[m] += static_cast<T>(alpha / 3.0 * g[m]);
            }
        }
    }
    stats.total = total_loss(stats.ce, stats.sbe, alpha);
    return stats;
}

}  // namespace wavelat
