#pragma once

#include <cstdint>
#include <vector>

#include "wavelat/tensor.hpp"

namespace wavelat {

// Synthetic three-class texture corpus. Classes are separated by where
// their energy lives in frequency:
//   0  smooth blobs      (low-pass filtered noise)
//   1  oriented stripes  (gratings with period 2.2 - 3.8 px)
//   2  checkerboard      (alternating pixels, the highest representable rate)
// Every image gets additive white noise; values are roughly in [-1, 1].
struct DatasetConfig {
    int images_per_class = 500;
    int image_size = 32;
    std::uint64_t seed = 7;
    double train_fraction = 0.8;
    double noise_std = 0.05;

    void validate() const;  // throws ConfigError
};

struct TextureDataset {
    DatasetConfig config;
    std::vector<Tensor3<float>> images;  // 1 x n x n each, class-major order
    std::vector<int> labels;
    std::vector<int> train_indices;  // balanced per-class split
    std::vector<int> test_indices;

    static constexpr int kClasses = 3;
    int size() const { return static_cast<int>(images.size()); }
};

// Deterministic in the config seed: image i of class c is generated by its
// own counter-derived RNG stream, independent of generation order.
TextureDataset make_texture_dataset(const DatasetConfig& cfg);

}  // namespace wavelat
