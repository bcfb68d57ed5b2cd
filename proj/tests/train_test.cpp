#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "wavelat/train.hpp"

using namespace wavelat;

namespace {

DatasetConfig tiny_data() {
    DatasetConfig d;
    d.images_per_class = 8;
    d.image_size = 16;
    d.seed = 3;
    return d;
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 11;
    cfg.data = tiny_data();
    return cfg;
}

// Fraction of spectral energy outside the half-band disc, via a direct DFT.
// Independent of every transform in the library.
double highband_ratio(const Tensor3<float>& img) {
    const int n = img.rows;
    std::vector<double> x(img.v.begin(), img.v.end());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= x.size();
    for (double& v : x) v -= mean;

    const double cutoff_sq = (std::numbers::pi / 2) * (std::numbers::pi / 2);
    double e_low = 0.0, e_high = 0.0;
    for (int kr = 0; kr < n; ++kr) {
        for (int kc = 0; kc < n; ++kc) {
            std::complex<double> acc = 0.0;
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    acc += x[static_cast<size_t>(r) * n + c] *
                           std::polar(1.0, -2.0 * std::numbers::pi * (double(kr) * r + double(kc) * c) / n);
            const double wr = 2.0 * std::numbers::pi * std::min(kr, n - kr) / n;
            const double wc = 2.0 * std::numbers::pi * std::min(kc, n - kc) / n;
            (wr * wr + wc * wc > cutoff_sq ? e_high : e_low) += std::norm(acc);
        }
    }
    return e_high / e_low;
}

bool same_params(ToyNet<float>& a, ToyNet<float>& b) {
    const auto pa = parameters(a);
    const auto pb = parameters(b);
    if (pa.size() != pb.size()) return false;
    for (size_t i = 0; i < pa.size(); ++i) {
        if (pa[i].name != pb[i].name || pa[i].size != pb[i].size) return false;
        if (std::memcmp(pa[i].value, pb[i].value, pa[i].size * sizeof(float)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("dataset generation") {
    const TextureDataset data = make_texture_dataset(tiny_data());

    SUBCASE("layout and split") {
        CHECK(data.size() == 24);
        for (int i = 0; i < data.size(); ++i) CHECK(data.labels[i] == i / 8);
        CHECK(data.train_indices.size() == 18);  // 6 per class
        CHECK(data.test_indices.size() == 6);
        std::vector<int> seen(24, 0);
        for (int i : data.train_indices) ++seen[i];
        for (int i : data.test_indices) ++seen[i];
        for (int s : seen) CHECK(s == 1);
        int per_class[3] = {0, 0, 0};
        for (int i : data.train_indices) ++per_class[data.labels[i]];
        for (int c : per_class) CHECK(c == 6);
        for (const auto& img : data.images) {
            CHECK(img.channels == 1);
            CHECK(img.rows == 16);
            for (float v : img.v) CHECK(std::isfinite(v));
        }
    }
    SUBCASE("deterministic in the seed") {
        const TextureDataset again = make_texture_dataset(tiny_data());
        REQUIRE(again.size() == data.size());
        for (int i = 0; i < data.size(); ++i)
            CHECK(std::memcmp(data.images[i].v.data(), again.images[i].v.data(),
                              data.images[i].v.size() * sizeof(float)) == 0);
        DatasetConfig other = tiny_data();
        other.seed = 4;
        const TextureDataset diff = make_texture_dataset(other);
        bool any = false;
        for (size_t i = 0; i < data.images[0].v.size(); ++i)
            any |= data.images[0].v[i] != diff.images[0].v[i];
        CHECK(any);
    }
    SUBCASE("classes separate by spectral band") {
        DatasetConfig d = tiny_data();
        d.image_size = 32;
        const TextureDataset big = make_texture_dataset(d);
        double mean_ratio[3] = {0, 0, 0};
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < 4; ++i) mean_ratio[c] += highband_ratio(big.images[c * 8 + i]);
            mean_ratio[c] /= 4;
        }
        CHECK(mean_ratio[0] < 1.0);  // blobs live below the half band
        CHECK(mean_ratio[1] > 2.0);  // stripes above it
        CHECK(mean_ratio[2] > 2.0);  // checkerboard at the top of it
        CHECK(mean_ratio[2] > mean_ratio[1]);
    }
    SUBCASE("config validation") {
        DatasetConfig d = tiny_data();
        d.images_per_class = 0;
        CHECK_THROWS_AS(d.validate(), ConfigError);
        d = tiny_data();
        d.image_size = 7;
        CHECK_THROWS_AS(d.validate(), ConfigError);
        d = tiny_data();
        d.train_fraction = 1.5;
        CHECK_THROWS_AS(d.validate(), ConfigError);
        d = tiny_data();
        d.noise_std = -0.1;
        CHECK_THROWS_AS(d.validate(), ConfigError);
    }
}

TEST_CASE("composite objective decomposes exactly") {
    const TextureDataset data = make_texture_dataset(tiny_data());
    std::mt19937 rng(5);
    ToyNet<float> net = make_toynet<float>(ToyNet<float>::Pooling::wavelet, angles_for_wavelet("db2"), rng);
    const std::vector<int> batch(data.train_indices.begin(), data.train_indices.begin() + 6);
    const SpectralGrid grid = default_lowpass_grid();

    for (double alpha : {0.0, 0.3, 1.0}) {
        const BatchStats s = composite_batch(net, data, batch, alpha, grid, false);
        CHECK(std::abs(s.total - ((1.0 - alpha) * s.ce + alpha * s.sbe)) <= 1e-12);
        CHECK(s.count == 6);
        CHECK(s.ce > 0.0);
        CHECK(s.sbe > 0.0);
    }
    const BatchStats fwd = composite_batch(net, data, batch, 0.5, grid, false);
    net.zero_grad();
    const BatchStats bwd = composite_batch(net, data, batch, 0.5, grid, true);
    CHECK(fwd.ce == bwd.ce);
    CHECK(fwd.sbe == bwd.sbe);
    CHECK(fwd.total == bwd.total);
    CHECK(fwd.correct == bwd.correct);

    CHECK_THROWS_AS(composite_batch(net, data, std::vector<int>{}, 0.5, grid, false), DataError);
    CHECK_THROWS_AS(composite_batch(net, data, std::vector<int>{99}, 0.5, grid, false), DataError);
}

TEST_CASE("composite gradients match finite differences in double") {
    const TextureDataset data = make_texture_dataset(tiny_data());
    // Samples picked so no ReLU pre-activation sits within the FD step of
    // zero; a kink inside the step biases the quotient, not the gradient.
    const std::vector<int> batch = {0, 3, 9, 13, 16, 19};
    const SpectralGrid grid = default_lowpass_grid();
    const double alpha = 0.5;

    std::mt19937 rng(17);
    ToyNet<double> net =
        make_toynet<double>(ToyNet<double>::Pooling::wavelet, angles_for_wavelet("db2"), rng);
    net.zero_grad();
    composite_batch(net, data, batch, alpha, grid, true);

    auto objective = [&]() { return composite_batch(net, data, batch, alpha, grid, false).total; };
    const double h = 1e-6, tol = 1e-6;
    std::mt19937 pick(23);
    for (const auto& p : parameters(net)) {
        std::uniform_int_distribution<size_t> which(0, p.size - 1);
        const int samples = p.size <= 4 ? static_cast<int>(p.size) : 3;
        for (int t = 0; t < samples; ++t) {
            const size_t i = p.size <= 4 ? static_cast<size_t>(t) : which(pick);
            const double saved = p.value[i];
            p.value[i] = saved + h;
            const double lp = objective();
            p.value[i] = saved - h;
            const double lm = objective();
            p.value[i] = saved;
            const double fd = (lp - lm) / (2 * h);
            CAPTURE(p.name);
            CAPTURE(i);
            CHECK(std::abs(fd - p.grad[i]) <= tol);
        }
    }
}

// Float-vs-float finite differences cannot resolve 1e-3 (forward noise near
// 1e-5 divided by any workable step dominates), so the oracle runs in double
// at the float network's exact parameter values.
TEST_CASE("float-path gradients match a double finite-difference oracle") {
    const TextureDataset data = make_texture_dataset(tiny_data());
    const std::vector<int> batch = {1, 4, 9, 12, 17, 20};
    const SpectralGrid grid = default_lowpass_grid();
    const double alpha = 0.5;

    std::mt19937 rng(29);
    ToyNet<float> net =
        make_toynet<float>(ToyNet<float>::Pooling::wavelet, angles_for_wavelet("db2"), rng);
    net.zero_grad();
    composite_batch(net, data, batch, alpha, grid, true);

    ToyNet<double> oracle = cast_toynet<double>(net);
    auto objective = [&]() { return composite_batch(oracle, data, batch, alpha, grid, false).total; };
    const double h = 1e-6;
    const auto fparams = parameters(net);
    const auto dparams = parameters(oracle);
    REQUIRE(fparams.size() == dparams.size());
    std::mt19937 pick(31);
    for (size_t pi = 0; pi < fparams.size(); ++pi) {
        const auto& fp = fparams[pi];
        const auto& dp = dparams[pi];
        REQUIRE(fp.name == dp.name);
        std::uniform_int_distribution<size_t> which(0, fp.size - 1);
        for (int t = 0; t < 2; ++t) {
            const size_t i = which(pick);
            const double saved = dp.value[i];
            dp.value[i] = saved + h;
            const double lp = objective();
            dp.value[i] = saved - h;
            const double lm = objective();
            dp.value[i] = saved;
            const double fd = (lp - lm) / (2 * h);
            CAPTURE(fp.name);
            CHECK(std::abs(fd - static_cast<double>(fp.grad[i])) <=
                  1e-3 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("training configuration validation") {
    TrainConfig cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate());

    cfg.arch = "resnet";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.wavelet = "db9";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.alpha = 1.2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.alpha = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    // db4 needs 8 taps; a 12x12 image pools to 6x6 which cannot hold them.
    cfg = tiny_config();
    cfg.wavelet = "db4";
    cfg.data.image_size = 12;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("training runs are bit-identical for equal configs") {
    const TrainConfig cfg = tiny_config();
    TrainResult a = train_model(cfg);
    TrainResult b = train_model(cfg);

    REQUIRE(a.history.size() == 3);
    CHECK(a.history[0].epoch == 1);
    CHECK(a.history[2].epoch == 3);
    for (size_t e = 0; e < a.history.size(); ++e) {
        CHECK(std::isfinite(a.history[e].l_total));
        CHECK(a.history[e].l_ce == b.history[e].l_ce);
        CHECK(a.history[e].l_sbe == b.history[e].l_sbe);
        CHECK(a.history[e].l_total == b.history[e].l_total);
        CHECK(a.history[e].train_acc == b.history[e].train_acc);
        CHECK(a.history[e].test_acc == b.history[e].test_acc);
    }
    CHECK(same_params(a.net, b.net));
    REQUIRE(a.unit_sbe.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK(a.unit_sbe[i] == b.unit_sbe[i]);

    TrainConfig other = cfg;
    other.seed = 12;
    TrainResult c = train_model(other);
    CHECK(!same_params(a.net, c.net));

    // The dataset-reusing overload is the same computation.
    TrainResult d = train_model(cfg, make_texture_dataset(cfg.data));
    CHECK(same_params(a.net, d.net));
}

TEST_CASE("trained filters stay orthogonal") {
    TrainConfig cfg = tiny_config();
    cfg.alpha = 0.5;
    cfg.epochs = 4;
    const TrainResult r = train_model(cfg);

    bool moved = false;
    const LatticeAngles init = angles_for_wavelet("db2");
    for (const AngleParameter<float>* ap : r.net.unit_angles()) {
        std::vector<double> theta(ap->value.begin(), ap->value.end());
        for (size_t m = 0; m < theta.size(); ++m) moved |= theta[m] != init.values[m];
        check_bank_invariants(lattice_to_filters(LatticeAngles(std::move(theta))));
    }
    CHECK(moved);

    // The stopband penalty actually pushes the units toward lower leakage.
    const SpectralGrid grid = default_lowpass_grid();
    const double init_sbe = sbe_loss(lattice_to_filters(init).h0, grid);
    const std::vector<double> trained = unit_stopband_losses(r.net, grid);
    REQUIRE(trained.size() == 3);
    double mean = (trained[0] + trained[1] + trained[2]) / 3.0;
    CHECK(mean < init_sbe);
}

TEST_CASE("average baseline trains without units") {
    TrainConfig cfg = tiny_config();
    cfg.arch = "average";
    const TrainResult r = train_model(cfg);
    CHECK(r.unit_sbe.empty());
    CHECK(!r.net.has_units());
    for (const auto& m : r.history) {
        CHECK(m.l_sbe == 0.0);
        CHECK(m.l_total == m.l_ce);
    }
    CHECK(unit_stopband_losses(r.net, default_lowpass_grid()).empty());
}

TEST_CASE("evaluation report") {
    const TrainConfig cfg = tiny_config();
    const TextureDataset data = make_texture_dataset(cfg.data);
    const TrainResult r = train_model(cfg, data);

    const EvalReport rep = evaluate(r.net, data, data.test_indices);
    CHECK(rep.samples == 6);
    REQUIRE(rep.confusion.size() == 3);
    int diag = 0, total = 0;
    for (int t = 0; t < 3; ++t) {
        int row = 0;
        for (int p = 0; p < 3; ++p) {
            row += rep.confusion[t][p];
            total += rep.confusion[t][p];
        }
        CHECK(row == 2);  // two test images per class
        diag += rep.confusion[t][t];
    }
    CHECK(total == 6);
    CHECK(rep.accuracy == doctest::Approx(double(diag) / 6.0).epsilon(1e-12));
    for (int t = 0; t < 3; ++t)
        CHECK(rep.per_class[t] == doctest::Approx(rep.confusion[t][t] / 2.0).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate(r.net, data, std::vector<int>{}), DataError);
    CHECK_THROWS_AS(evaluate(r.net, data, std::vector<int>{-1}), DataError);
}

TEST_CASE("a small training set is memorized") {
    // Low-noise subset; epoch count set by pilot run (converges by ~20).
    TrainConfig cfg;
    cfg.alpha = 0.25;
    cfg.lr = 0.05;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.seed = 11;
    cfg.data.images_per_class = 24;
    cfg.data.image_size = 16;
    cfg.data.seed = 3;

    const TrainResult r = train_model(cfg);
    CHECK(r.history.back().train_acc > 0.95);
}

TEST_CASE("an untrained net scores near chance") {
    DatasetConfig d;
    d.images_per_class = 30;
    d.image_size = 16;
    d.seed = 3;
    const TextureDataset data = make_texture_dataset(d);

    for (uint64_t seed : {1, 2, 3}) {
        std::mt19937 rng(static_cast<unsigned>(seed));
        ToyNet<float> net =
            make_toynet<float>(ToyNet<float>::Pooling::wavelet, angles_for_wavelet("db2"), rng);
        const EvalReport rep = evaluate(net, data, data.test_indices);
        CHECK(rep.accuracy >= 0.2);
        CHECK(rep.accuracy <= 0.5);
    }
}

TEST_CASE("alpha sweep") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 2;

    const std::vector<double> alphas = {0.0, 0.6};
    const std::vector<TrainResult> results = alpha_sweep(cfg, alphas);
    REQUIRE(results.size() == 2);
    CHECK(results[0].config.alpha == 0.0);
    CHECK(results[1].config.alpha == 0.6);
    for (const auto& r : results) CHECK(r.history.size() == 2);

    // Matches a direct run at the same alpha on the same data.
    TrainConfig direct_cfg = cfg;
    direct_cfg.alpha = 0.6;
    TrainResult direct = train_model(direct_cfg);
    TrainResult from_sweep = results[1];
    CHECK(same_params(direct.net, from_sweep.net));

    CHECK(alpha_sweep(cfg, std::vector<double>{}).empty());
    CHECK_THROWS_AS(alpha_sweep(cfg, std::vector<double>{0.5, 1.5}), ConfigError);
}
