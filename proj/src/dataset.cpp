#include "wavelat/dataset.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "wavelat/errors.hpp"

namespace wavelat {
namespace {

constexpr double kPi = std::numbers::pi;

// splitmix64; decorrelates the per-image streams derived from one seed.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::mt19937 image_rng(std::uint64_t seed, int cls, int index) {
    const std::uint64_t s = mix64(seed ^ mix64((static_cast<std::uint64_t>(cls) << 32) ^
                                               static_cast<std::uint64_t>(index)));
    return std::mt19937(static_cast<std::uint32_t>(s ^ (s >> 32)));
}

// Separable circular blur with the binomial kernel [1 4 6 4 1] / 16.
void binomial_blur(std::vector<double>& img, int n) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    std::vector<double> tmp(img.size());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t) acc += k[t + 2] * img[r * n + (c + t + n) % n];
            tmp[r * n + c] = acc;
        }
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t) acc += k[t + 2] * tmp[((r + t + n) % n) * n + c];
            img[r * n + c] = acc;
        }
}

void make_blobs(std::vector<double>& img, int n, std::mt19937& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> amp(0.35, 0.6);
    for (double& v : img) v = noise(rng);
    binomial_blur(img, n);
    binomial_blur(img, n);
    double mean = 0.0;
    for (double v : img) mean += v;
    mean /= img.size();
    double rms = 0.0;
    for (double v : img) rms += (v - mean) * (v - mean);
    rms = std::sqrt(rms / img.size());
    const double a = amp(rng) / std::max(rms, 1e-9);
    for (double& v : img) v = a * (v - mean);
}

void make_stripes(std::vector<double>& img, int n, std::mt19937& rng) {
    // Amplitudes sit well below the blob class so the high-frequency classes
    // stay signal-limited once observation noise is added.
    std::uniform_real_distribution<double> amp(0.10, 0.18);
    std::uniform_real_distribution<double> period(2.2, 3.8);
    std::uniform_real_distribution<double> orient(0.0, kPi);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    const double a = amp(rng);
    const double k = 2.0 * kPi / period(rng);
    const double phi = orient(rng);
    const double kx = k * std::cos(phi);
    const double ky = k * std::sin(phi);
    const double psi = phase(rng);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) img[r * n + c] = a * std::sin(kx * c + ky * r + psi);
}

void make_checker(std::vector<double>& img, int n, std::mt19937& rng) {
    // Zero-mean by construction; the class carries no DC cue, only the
    // Nyquist-rate alternation.
    std::uniform_real_distribution<double> amp(0.10, 0.18);
    std::uniform_int_distribution<int> parity(0, 1);
    const double a = amp(rng);
    const int s = parity(rng);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) img[r * n + c] = (r + c + s) % 2 == 0 ? a : -a;
}

}  // namespace

void DatasetConfig::validate() const {
    if (images_per_class < 1) throw ConfigError("dataset: images_per_class must be positive");
    if (image_size < 4 || image_size % 2 != 0)
        throw ConfigError("dataset: image_size must be even and at least 4");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("dataset: train_fraction must lie in (0, 1)");
    if (!(noise_std >= 0.0)) throw ConfigError("dataset: noise_std must be non-negative");
    const int train_per = static_cast<int>(std::lround(train_fraction * images_per_class));
    if (train_per < 1 || train_per >= images_per_class)
        throw ConfigError("dataset: split leaves an empty train or test side");
}

TextureDataset make_texture_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    const int n = cfg.image_size;
    TextureDataset ds;
    ds.config = cfg;
    ds.images.reserve(static_cast<size_t>(TextureDataset::kClasses) * cfg.images_per_class);
    std::vector<double> img(static_cast<size_t>(n) * n);

    for (int cls = 0; cls < TextureDataset::kClasses; ++cls) {
        for (int i = 0; i < cfg.images_per_class; ++i) {
            std::mt19937 rng = image_rng(cfg.seed, cls, i);
            switch (cls) {
                case 0: make_blobs(img, n, rng); break;
                case 1: make_stripes(img, n, rng); break;
                default: make_checker(img, n, rng); break;
            }
            std::normal_distribution<double> noise(0.0, cfg.noise_std);
            Tensor3<float> t(1, n, n);
            for (size_t p = 0; p < img.size(); ++p)
                t.v[p] = static_cast<float>(img[p] + (cfg.noise_std > 0.0 ? noise(rng) : 0.0));
            ds.images.push_back(std::move(t));
            ds.labels.push_back(cls);
        }
    }

    const int train_per = static_cast<int>(std::lround(cfg.train_fraction * cfg.images_per_class));
    for (int cls = 0; cls < TextureDataset::kClasses; ++cls) {
        const int base = cls * cfg.images_per_class;
        for (int i = 0; i < cfg.images_per_class; ++i)
            (i < train_per ? ds.train_indices : ds.test_indices).push_back(base + i);
    }
    return ds;
}

}  // namespace wavelat
