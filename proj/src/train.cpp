#include "wavelat/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wavelat/errors.hpp"
#include "wavelat/lattice.hpp"

namespace wavelat {
namespace {

struct SgdMomentum {
    double lr;
    double momentum;
    std::vector<std::vector<float>> velocity;

    void step(std::vector<ParamRef<float>>& params) {
        if (velocity.empty()) {
            velocity.resize(params.size());
            for (size_t i = 0; i < params.size(); ++i) velocity[i].assign(params[i].size, 0.0f);
        }
        for (size_t i = 0; i < params.size(); ++i) {
            ParamRef<float>& p = params[i];
            std::vector<float>& v = velocity[i];
            for (size_t j = 0; j < p.size; ++j) {
                v[j] = static_cast<float>(momentum) * v[j] - static_cast<float>(lr) * p.grad[j];
                p.value[j] += v[j];
            }
        }
    }
};

typename ToyNet<float>::Pooling parse_arch(const std::string& arch) {
    if (arch == "wavelet") return ToyNet<float>::Pooling::wavelet;
    if (arch == "average") return ToyNet<float>::Pooling::average;
    throw ConfigError("train: unknown arch '" + arch + "' (expected wavelet or average)");
}

}  // namespace

void TrainConfig::validate() const {
    parse_arch(arch);
    named_wavelet_h0(wavelet);  // throws for unknown names
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("train: alpha must lie in [0, 1]");
    if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must lie in [0, 1)");
    if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
    grid.validate();
    data.validate();
    const int taps = static_cast<int>(named_wavelet_h0(wavelet).size());
    // Two unit levels halve the input twice; the smallest plane the deepest
    // units see must still fit the filter.
    if (data.image_size / 2 < taps || data.image_size / 4 < 1)
        throw ConfigError("train: image_size too small for the chosen wavelet");
}

TrainResult train_model(const TrainConfig& cfg) {
    cfg.validate();
    return train_model(cfg, make_texture_dataset(cfg.data));
}

TrainResult train_model(const TrainConfig& cfg, const TextureDataset& data) {
    cfg.validate();
    if (data.train_indices.empty() || data.test_indices.empty())
        throw DataError("train: dataset has an empty split");

    std::mt19937 init_rng(static_cast<std::uint32_t>(cfg.seed * 2654435761u + 17u));
    const LatticeAngles init_angles = angles_for_wavelet(cfg.wavelet);
    TrainResult result;
    result.net = make_toynet<float>(parse_arch(cfg.arch), init_angles, init_rng);
    result.config = cfg;

    std::mt19937 shuffle_rng(static_cast<std::uint32_t>(cfg.seed * 40503u + 977u));
    std::vector<int> order(data.train_indices.begin(), data.train_indices.end());
    std::vector<ParamRef<float>> params = parameters(result.net);
    SgdMomentum opt{cfg.lr, cfg.momentum, {}};

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sum_ce = 0.0, sum_sbe = 0.0, sum_total = 0.0;
        int correct = 0, seen = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t count = std::min<size_t>(cfg.batch_size, order.size() - start);
            const std::span<const int> batch(order.data() + start, count);
            result.net.zero_grad();
            const BatchStats stats =
                composite_batch(result.net, data, batch, cfg.alpha, cfg.grid, true);
            opt.step(params);
            sum_ce += stats.ce * stats.count;
            sum_sbe += stats.sbe * stats.count;
            sum_total += stats.total * stats.count;
            correct += stats.correct;
            seen += stats.count;
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.l_ce = sum_ce / seen;
        m.l_sbe = sum_sbe / seen;
        m.l_total = sum_total / seen;
        m.train_acc = static_cast<double>(correct) / seen;
        m.test_acc = evaluate(result.net, data, data.test_indices).accuracy;
        if (!std::isfinite(m.l_total))
            throw NumericError("train: loss diverged to a non-finite value");
        result.history.push_back(m);
    }

    result.unit_sbe = unit_stopband_losses(result.net, cfg.grid);
    return result;
}

EvalReport evaluate(const ToyNet<float>& net, const TextureDataset& data,
                    std::span<const int> indices) {
    if (indices.empty()) throw DataError("evaluate: empty index set");
    const int classes = ToyNet<float>::kClasses;
    EvalReport report;
    report.samples = static_cast<int>(indices.size());
    report.confusion.assign(classes, std::vector<int>(classes, 0));
    int correct = 0;
    for (int idx : indices) {
        if (idx < 0 || idx >= data.size()) throw DataError("evaluate: index out of range");
        const Tensor3<float>& x = data.images[idx];
        const std::vector<float> logits = toynet_forward<float>(net, x, nullptr);
        int pred = 0;
        for (int i = 1; i < classes; ++i)
            if (logits[i] > logits[pred]) pred = i;
        const int label = data.labels[idx];
        report.confusion[label][pred] += 1;
        if (pred == label) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / report.samples;
    report.per_class.assign(classes, 0.0);
    for (int c = 0; c < classes; ++c) {
        int row = 0;
        for (int p = 0; p < classes; ++p) row += report.confusion[c][p];
        report.per_class[c] = row > 0 ? static_cast<double>(report.confusion[c][c]) / row : 0.0;
    }
    return report;
}

std::vector<TrainResult> alpha_sweep(const TrainConfig& base, std::span<const double> alphas) {
    base.validate();
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("sweep: alpha must lie in [0, 1]");
    std::vector<TrainResult> results;
    if (alphas.empty()) return results;
    const TextureDataset data = make_texture_dataset(base.data);
    for (double a : alphas) {
        TrainConfig cfg = base;
        cfg.alpha = a;
        results.push_back(train_model(cfg, data));
    }
    return results;
}

std::vector<double> unit_stopband_losses(const ToyNet<float>& net, const SpectralGrid& grid) {
    std::vector<double> out;
    for (const AngleParameter<float>* ap : net.unit_angles()) {
        std::vector<double> a(ap->value.begin(), ap->value.end());
        out.push_back(sbe_loss(lattice_to_filters(LatticeAngles(std::move(a))).h0, grid));
    }
    return out;
}

}  // namespace wavelat
