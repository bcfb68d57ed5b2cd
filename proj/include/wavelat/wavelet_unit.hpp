#pragma once

#include <array>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "wavelat/lattice.hpp"
#include "wavelat/sepfilter.hpp"
#include "wavelat/tensor.hpp"

namespace wavelat {

// Where a unit sits in a network. The core operation is the same for every
// mode; the mode tells the harness how to wire the unit in:
//   pool          standalone replacement for a 2x2 pooling layer
//   conv_replace  runs after a stride-1 convolution, supplying the stride
//   downsample    shortcut-path reduction feeding a 1x1 projection
enum class UnitMode { pool, conv_replace, downsample };

UnitMode parse_unit_mode(std::string_view name);  // throws ConfigError
std::string_view unit_mode_name(UnitMode mode);

// Trainable angle vector. Held by shared_ptr so a unit and its optimizer
// slot see one storage; distinct units default to distinct parameters.
template <typename T>
struct AngleParameter {
    std::vector<T> value;
    std::vector<T> grad;

    explicit AngleParameter(const LatticeAngles& init) {
        value.reserve(init.values.size());
        for (double a : init.values) value.push_back(static_cast<T>(a));
        grad.assign(value.size(), T(0));
    }

    int stages() const { return static_cast<int>(value.size()); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

// Learnable downsampling unit: per-channel one-level periodic wavelet split,
// ReLU on all four subbands, then a shared linear combiner
//   y = bias + w_ll*relu(ll) + w_lh*relu(lh) + w_hl*relu(hl) + w_hh*relu(hh).
// Halves both spatial dimensions; channel count is preserved. The filters
// are re-derived from the angles on every call, so a gradient step on the
// angles immediately moves the filters while staying orthogonal.
template <typename T>
struct WaveletUnit {
    std::shared_ptr<AngleParameter<T>> angles;
    int channels = 0;
    UnitMode mode = UnitMode::pool;
    std::array<T, 4> weights{T(1), T(0.1), T(0.1), T(0.1)};  // ll, lh, hl, hh
    T bias = T(0);
    std::array<T, 4> weight_grad{};
    T bias_grad = T(0);

    void zero_grad() {
        weight_grad = {T(0), T(0), T(0), T(0)};
        bias_grad = T(0);
        if (angles) angles->zero_grad();
    }
};

template <typename T>
WaveletUnit<T> make_replacement(UnitMode mode, int channels, const LatticeAngles& angles_init) {
    if (channels < 1) throw ConfigError("wavelet unit: channels must be positive");
    WaveletUnit<T> unit;
    unit.angles = std::make_shared<AngleParameter<T>>(angles_init);
    unit.channels = channels;
    unit.mode = mode;
    return unit;
}

// Analysis pair cast to the working precision. The lattice map itself always
// runs in double.
template <typename T>
struct UnitFilters {
    std::vector<T> h0, h1;
};

template <typename T>
UnitFilters<T> unit_filters(const AngleParameter<T>& angles) {
    std::vector<double> a(angles.value.begin(), angles.value.end());
    const FilterBank bank = lattice_to_filters(LatticeAngles(std::move(a)));
    UnitFilters<T> f;
    f.h0.assign(bank.h0.begin(), bank.h0.end());
    f.h1.assign(bank.h1.begin(), bank.h1.end());
    return f;
}

// Intermediates captured by the forward pass for the exact backward pass.
// Subband planes are stored pre-ReLU.
template <typename T>
struct UnitCache {
    UnitFilters<T> filters;
    Tensor3<T> low, high;                // vertical-pass results, C x n/2 x n
    std::array<Tensor3<T>, 4> subbands;  // ll, lh, hl, hh  (pre-ReLU)
};

template <typename T>
Tensor3<T> unit_forward(const WaveletUnit<T>& unit, const Tensor3<T>& x,
                        UnitCache<T>* cache = nullptr) {
    if (!unit.angles) throw ConfigError("wavelet unit: missing angle parameter");
    if (x.channels != unit.channels)
        throw DimensionError("wavelet unit: input channel count does not match unit");
    if (x.rows != x.cols) throw DimensionError("wavelet unit: input must be square");
    const int n = x.rows;
    const UnitFilters<T> f = unit_filters(*unit.angles);
    const int taps = static_cast<int>(f.h0.size());
    if (n < 2 || n % 2 != 0 || n < taps)
        throw DimensionError("wavelet unit: input size must be even and at least the filter length");

    const int half = n / 2;
    const int c_count = x.channels;
    Tensor3<T> low(c_count, half, n), high(c_count, half, n);
    std::array<Tensor3<T>, 4> bands;
    for (auto& b : bands) b = Tensor3<T>(c_count, half, half);

    const std::span<const T> h0(f.h0), h1(f.h1);
    for (int c = 0; c < c_count; ++c) {
        detail::decimate_vertical(x.plane(c), n, n, h0, low.plane(c));
        detail::decimate_vertical(x.plane(c), n, n, h1, high.plane(c));
        detail::decimate_horizontal(low.plane(c), half, n, h0, bands[0].plane(c));   // ll
        detail::decimate_horizontal(high.plane(c), half, n, h0, bands[1].plane(c));  // lh
        detail::decimate_horizontal(low.plane(c), half, n, h1, bands[2].plane(c));   // hl
        detail::decimate_horizontal(high.plane(c), half, n, h1, bands[3].plane(c));  // hh
    }

    Tensor3<T> y(c_count, half, half);
    for (size_t i = 0; i < y.v.size(); ++i) {
        T acc = unit.bias;
        for (int s = 0; s < 4; ++s) {
            const T v = bands[s].v[i];
            if (v > T(0)) acc += unit.weights[s] * v;
        }
        y.v[i] = acc;
    }

    if (cache) {
        cache->filters = f;
        cache->low = std::move(low);
        cache->high = std::move(high);
        cache->subbands = std::move(bands);
    }
    return y;
}

// Backward pass. Accumulates combiner and angle gradients on the unit and
// returns d(loss)/d(input). `x` must be the same tensor the forward saw.
template <typename T>
Tensor3<T> unit_backward(WaveletUnit<T>& unit, const Tensor3<T>& x, const UnitCache<T>& cache,
                         const Tensor3<T>& gout) {
    const int n = x.rows;
    const int half = n / 2;
    const int c_count = x.channels;
    if (gout.channels != c_count || gout.rows != half || gout.cols != half)
        throw DimensionError("wavelet unit backward: gradient shape mismatch");
    const std::span<const T> h0(cache.filters.h0), h1(cache.filters.h1);
    const int taps = static_cast<int>(h0.size());

    // Combiner gradients plus per-subband upstream gradients (ReLU saved as
    // pre-activation sign; subgradient at exactly zero is zero).
    std::array<Tensor3<T>, 4> gband;
    for (auto& g : gband) g = Tensor3<T>(c_count, half, half);
    T gbias = T(0);
    std::array<T, 4> gweights{};
    for (size_t i = 0; i < gout.v.size(); ++i) {
        const T g = gout.v[i];
        gbias += g;
        for (int s = 0; s < 4; ++s) {
            const T pre = cache.subbands[s].v[i];
            if (pre > T(0)) {
                gweights[s] += g * pre;
                gband[s].v[i] = unit.weights[s] * g;
            }
        }
    }
    unit.bias_grad += gbias;
    for (int s = 0; s < 4; ++s) unit.weight_grad[s] += gweights[s];

    // Undo the horizontal pass: gradients to the vertical intermediates and
    // the filter taps, then undo the vertical pass the same way.
    std::vector<T> gh0(taps, T(0)), gh1(taps, T(0));
    Tensor3<T> glow(c_count, half, n), ghigh(c_count, half, n);
    Tensor3<T> gx(c_count, n, n);
    for (int c = 0; c < c_count; ++c) {
        detail::filter_grad_horizontal(gband[0].plane(c), cache.low.plane(c), half, n, taps,
                                       gh0.data());
        detail::filter_grad_horizontal(gband[1].plane(c), cache.high.plane(c), half, n, taps,
                                       gh0.data());
        detail::filter_grad_horizontal(gband[2].plane(c), cache.low.plane(c), half, n, taps,
                                       gh1.data());
        detail::filter_grad_horizontal(gband[3].plane(c), cache.high.plane(c), half, n, taps,
                                       gh1.data());
        detail::expand_horizontal_accum(gband[0].plane(c), half, n, h0, glow.plane(c));
        detail::expand_horizontal_accum(gband[2].plane(c), half, n, h1, glow.plane(c));
        detail::expand_horizontal_accum(gband[1].plane(c), half, n, h0, ghigh.plane(c));
        detail::expand_horizontal_accum(gband[3].plane(c), half, n, h1, ghigh.plane(c));

        detail::filter_grad_vertical(glow.plane(c), x.plane(c), n, n, taps, gh0.data());
        detail::filter_grad_vertical(ghigh.plane(c), x.plane(c), n, n, taps, gh1.data());
        detail::expand_vertical_accum(glow.plane(c), n, n, h0, gx.plane(c));
        detail::expand_vertical_accum(ghigh.plane(c), n, n, h1, gx.plane(c));
    }

    // Fold the h1 gradient onto h0 through the alternating flip, then chain
    // through the lattice Jacobian in double precision.
    std::vector<double> gh0_total(taps);
    for (int j = 0; j < taps; ++j) {
        const double sign = ((taps - 1 - j) % 2 == 0) ? 1.0 : -1.0;
        gh0_total[j] = static_cast<double>(gh0[j]) + sign * static_cast<double>(gh1[taps - 1 - j]);
    }
    std::vector<double> a(unit.angles->value.begin(), unit.angles->value.end());
    const Mat jac = filters_jacobian(LatticeAngles(std::move(a)));
    for (int m = 0; m < jac.cols; ++m) {
        double s = 0.0;
        for (int j = 0; j < jac.rows; ++j) s += jac(j, m) * gh0_total[j];
        unit.angles->grad[m] += static_cast<T>(s);
    }
    return gx;
}

}  // namespace wavelat
