#pragma once

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wavelat/tensor.hpp"
#include "wavelat/wavelet_unit.hpp"

namespace wavelat {

// Stride-1 square convolution with zero padding that preserves the spatial
// size. Weights are He-initialized; gradients accumulate until zero_grad.
template <typename T>
struct Conv2d {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int pad = 0;
    std::vector<T> w;   // [out][in][k][k]
    std::vector<T> b;   // [out]
    std::vector<T> gw;
    std::vector<T> gb;

    Conv2d() = default;
    Conv2d(int in_c, int out_c, int k)
        : in_channels(in_c), out_channels(out_c), kernel(k), pad(k / 2),
          w(static_cast<size_t>(out_c) * in_c * k * k, T(0)), b(out_c, T(0)),
          gw(w.size(), T(0)), gb(out_c, T(0)) {}

    void init(std::mt19937& rng) {
        const double stddev = std::sqrt(2.0 / (in_channels * kernel * kernel));
        std::normal_distribution<double> dist(0.0, stddev);
        for (T& x : w) x = static_cast<T>(dist(rng));
        std::fill(b.begin(), b.end(), T(0));
    }

    const T& weight(int oc, int ic, int kr, int kc) const {
        return w[((static_cast<size_t>(oc) * in_channels + ic) * kernel + kr) * kernel + kc];
    }
    T& gweight(int oc, int ic, int kr, int kc) {
        return gw[((static_cast<size_t>(oc) * in_channels + ic) * kernel + kr) * kernel + kc];
    }

    Tensor3<T> forward(const Tensor3<T>& x) const {
        if (x.channels != in_channels) throw DimensionError("conv: input channel mismatch");
        Tensor3<T> y(out_channels, x.rows, x.cols);
        for (int oc = 0; oc < out_channels; ++oc) {
            for (int r = 0; r < x.rows; ++r) {
                for (int c = 0; c < x.cols; ++c) {
                    T acc = b[oc];
                    for (int ic = 0; ic < in_channels; ++ic) {
                        const T* xp = x.plane(ic);
                        for (int kr = 0; kr < kernel; ++kr) {
                            const int rr = r + kr - pad;
                            if (rr < 0 || rr >= x.rows) continue;
                            for (int kc = 0; kc < kernel; ++kc) {
                                const int cc = c + kc - pad;
                                if (cc < 0 || cc >= x.cols) continue;
                                acc += weight(oc, ic, kr, kc) * xp[static_cast<size_t>(rr) * x.cols + cc];
                            }
                        }
                    }
                    y.at(oc, r, c) = acc;
                }
            }
        }
        return y;
    }

    Tensor3<T> backward(const Tensor3<T>& x, const Tensor3<T>& gout) {
        Tensor3<T> gx(x.channels, x.rows, x.cols);
        for (int oc = 0; oc < out_channels; ++oc) {
            const T* gp = gout.plane(oc);
            T gbias = T(0);
            for (size_t i = 0; i < gout.plane_size(); ++i) gbias += gp[i];
            gb[oc] += gbias;
            for (int r = 0; r < x.rows; ++r) {
                for (int c = 0; c < x.cols; ++c) {
                    const T g = gout.at(oc, r, c);
                    if (g == T(0)) continue;
                    for (int ic = 0; ic < in_channels; ++ic) {
                        for (int kr = 0; kr < kernel; ++kr) {
                            const int rr = r + kr - pad;
                            if (rr < 0 || rr >= x.rows) continue;
                            for (int kc = 0; kc < kernel; ++kc) {
                                const int cc = c + kc - pad;
                                if (cc < 0 || cc >= x.cols) continue;
                                gweight(oc, ic, kr, kc) += g * x.at(ic, rr, cc);
                                gx.at(ic, rr, cc) += g * weight(oc, ic, kr, kc);
                            }
                        }
                    }
                }
            }
        }
        return gx;
    }

    void zero_grad() {
        std::fill(gw.begin(), gw.end(), T(0));
        std::fill(gb.begin(), gb.end(), T(0));
    }
};

template <typename T>
struct Linear {
    int in_features = 0;
    int out_features = 0;
    std::vector<T> w;  // [out][in]
    std::vector<T> b;
    std::vector<T> gw;
    std::vector<T> gb;

    Linear() = default;
    Linear(int in_f, int out_f)
        : in_features(in_f), out_features(out_f), w(static_cast<size_t>(out_f) * in_f, T(0)),
          b(out_f, T(0)), gw(w.size(), T(0)), gb(out_f, T(0)) {}

    // Small-scale classifier init: keeps initial logits near zero whatever the
    // activation scale handed to the head, so the first epochs start from a
    // near-uniform softmax instead of confident noise.
    void init(std::mt19937& rng) {
        std::normal_distribution<double> dist(0.0, 0.01);
        for (T& x : w) x = static_cast<T>(dist(rng));
        std::fill(b.begin(), b.end(), T(0));
    }

    std::vector<T> forward(std::span<const T> x) const {
        std::vector<T> y(out_features);
        for (int o = 0; o < out_features; ++o) {
            T acc = b[o];
            for (int i = 0; i < in_features; ++i) acc += w[static_cast<size_t>(o) * in_features + i] * x[i];
            y[o] = acc;
        }
        return y;
    }

    std::vector<T> backward(std::span<const T> x, std::span<const T> gout) {
        std::vector<T> gx(in_features, T(0));
        for (int o = 0; o < out_features; ++o) {
            const T g = gout[o];
            gb[o] += g;
            for (int i = 0; i < in_features; ++i) {
                gw[static_cast<size_t>(o) * in_features + i] += g * x[i];
                gx[i] += g * w[static_cast<size_t>(o) * in_features + i];
            }
        }
        return gx;
    }

    void zero_grad() {
        std::fill(gw.begin(), gw.end(), T(0));
        std::fill(gb.begin(), gb.end(), T(0));
    }
};

template <typename T>
Tensor3<T> relu(const Tensor3<T>& x) {
    Tensor3<T> y = x;
    for (T& v : y.v) v = v > T(0) ? v : T(0);
    return y;
}

// Uses the pre-activation sign; the subgradient at exactly zero is zero.
template <typename T>
Tensor3<T> relu_backward(const Tensor3<T>& pre, const Tensor3<T>& gout) {
    Tensor3<T> gx(pre.channels, pre.rows, pre.cols);
    for (size_t i = 0; i < pre.v.size(); ++i) gx.v[i] = pre.v[i] > T(0) ? gout.v[i] : T(0);
    return gx;
}

template <typename T>
Tensor3<T> avgpool2x2(const Tensor3<T>& x) {
    if (x.rows % 2 != 0 || x.cols % 2 != 0)
        throw DimensionError("avgpool2x2: spatial size must be even");
    Tensor3<T> y(x.channels, x.rows / 2, x.cols / 2);
    for (int c = 0; c < x.channels; ++c)
        for (int r = 0; r < y.rows; ++r)
            for (int j = 0; j < y.cols; ++j)
                y.at(c, r, j) = (x.at(c, 2 * r, 2 * j) + x.at(c, 2 * r, 2 * j + 1) +
                                 x.at(c, 2 * r + 1, 2 * j) + x.at(c, 2 * r + 1, 2 * j + 1)) /
                                T(4);
    return y;
}

template <typename T>
Tensor3<T> avgpool2x2_backward(const Tensor3<T>& gout) {
    Tensor3<T> gx(gout.channels, gout.rows * 2, gout.cols * 2);
    for (int c = 0; c < gout.channels; ++c)
        for (int r = 0; r < gout.rows; ++r)
            for (int j = 0; j < gout.cols; ++j) {
                const T g = gout.at(c, r, j) / T(4);
                gx.at(c, 2 * r, 2 * j) = g;
                gx.at(c, 2 * r, 2 * j + 1) = g;
                gx.at(c, 2 * r + 1, 2 * j) = g;
                gx.at(c, 2 * r + 1, 2 * j + 1) = g;
            }
    return gx;
}

template <typename T>
std::vector<T> global_avg_pool(const Tensor3<T>& x) {
    std::vector<T> y(x.channels);
    for (int c = 0; c < x.channels; ++c) {
        T acc = T(0);
        const T* p = x.plane(c);
        for (size_t i = 0; i < x.plane_size(); ++i) acc += p[i];
        y[c] = acc / static_cast<T>(x.plane_size());
    }
    return y;
}

template <typename T>
Tensor3<T> global_avg_pool_backward(int rows, int cols, std::span<const T> gout) {
    Tensor3<T> gx(static_cast<int>(gout.size()), rows, cols);
    const T scale = T(1) / static_cast<T>(static_cast<size_t>(rows) * cols);
    for (int c = 0; c < gx.channels; ++c) {
        const T g = gout[c] * scale;
        T* p = gx.plane(c);
        for (size_t i = 0; i < gx.plane_size(); ++i) p[i] = g;
    }
    return gx;
}

// Numerically stable softmax cross-entropy for one sample.
template <typename T>
struct SoftmaxCE {
    double loss = 0.0;
    std::vector<T> dlogits;
    int predicted = 0;
};

template <typename T>
SoftmaxCE<T> softmax_cross_entropy(std::span<const T> logits, int label) {
    const int n = static_cast<int>(logits.size());
    if (label < 0 || label >= n) throw DataError("cross-entropy: label out of range");
    double maxv = static_cast<double>(logits[0]);
    int argmax = 0;
    for (int i = 1; i < n; ++i)
        if (static_cast<double>(logits[i]) > maxv) {
            maxv = static_cast<double>(logits[i]);
            argmax = i;
        }
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(static_cast<double>(logits[i]) - maxv);
    SoftmaxCE<T> out;
    out.predicted = argmax;
    out.loss = std::log(z) + maxv - static_cast<double>(logits[label]);
    out.dlogits.resize(n);
    for (int i = 0; i < n; ++i) {
        const double p = std::exp(static_cast<double>(logits[i]) - maxv) / z;
        out.dlogits[i] = static_cast<T>(p - (i == label ? 1.0 : 0.0));
    }
    return out;
}

// Small residual classifier for 1 x n x n texture patches (n divisible by 4):
//   stem 3x3 conv (1->8), ReLU, downsample to n/2
//   main path: 3x3 conv (8->16), ReLU, downsample to n/4
//   shortcut:  downsample to n/4, 1x1 conv (8->16)
//   add, ReLU, global average pool, linear head (16 -> classes).
// Downsampling sites hold wavelet units, or 2x2 average pooling for the
// plain baseline with the same convolution/head parameter budget.
template <typename T>
struct ToyNet {
    enum class Pooling { wavelet, average };

    Pooling pooling = Pooling::wavelet;
    Conv2d<T> stem;
    WaveletUnit<T> unit_pool;      // after the stem, 8 channels
    Conv2d<T> main_conv;
    WaveletUnit<T> unit_main;      // after main_conv (stride-1 conv + unit)
    WaveletUnit<T> unit_shortcut;  // shortcut branch, 8 channels
    Conv2d<T> shortcut_proj;
    Linear<T> head;

    static constexpr int kClasses = 3;

    bool has_units() const { return pooling == Pooling::wavelet; }

    std::vector<const AngleParameter<T>*> unit_angles() const {
        if (!has_units()) return {};
        return {unit_pool.angles.get(), unit_main.angles.get(), unit_shortcut.angles.get()};
    }

    void zero_grad() {
        stem.zero_grad();
        main_conv.zero_grad();
        shortcut_proj.zero_grad();
        head.zero_grad();
        if (has_units()) {
            unit_pool.zero_grad();
            unit_main.zero_grad();
            unit_shortcut.zero_grad();
        }
    }
};

template <typename T>
ToyNet<T> make_toynet(typename ToyNet<T>::Pooling pooling, const LatticeAngles& angles_init,
                      std::mt19937& rng) {
    ToyNet<T> net;
    net.pooling = pooling;
    net.stem = Conv2d<T>(1, 8, 3);
    net.main_conv = Conv2d<T>(8, 16, 3);
    net.shortcut_proj = Conv2d<T>(8, 16, 1);
    net.head = Linear<T>(16, ToyNet<T>::kClasses);
    net.stem.init(rng);
    net.main_conv.init(rng);
    net.shortcut_proj.init(rng);
    net.head.init(rng);
    if (pooling == ToyNet<T>::Pooling::wavelet) {
        net.unit_pool = make_replacement<T>(UnitMode::pool, 8, angles_init);
        net.unit_main = make_replacement<T>(UnitMode::conv_replace, 16, angles_init);
        net.unit_shortcut = make_replacement<T>(UnitMode::downsample, 8, angles_init);
    }
    return net;
}

// Precision-converted copy holding the same parameter values. Gradient
// checks use it to evaluate a 64-bit oracle at a 32-bit network's weights.
template <typename To, typename From>
ToyNet<To> cast_toynet(const ToyNet<From>& src) {
    ToyNet<To> dst;
    dst.pooling = src.pooling == ToyNet<From>::Pooling::wavelet ? ToyNet<To>::Pooling::wavelet
                                                                : ToyNet<To>::Pooling::average;
    const auto cast_conv = [](const Conv2d<From>& c) {
        Conv2d<To> out(c.in_channels, c.out_channels, c.kernel);
        for (size_t i = 0; i < c.w.size(); ++i) out.w[i] = static_cast<To>(c.w[i]);
        for (size_t i = 0; i < c.b.size(); ++i) out.b[i] = static_cast<To>(c.b[i]);
        return out;
    };
    const auto cast_unit = [](const WaveletUnit<From>& u) {
        std::vector<double> a(u.angles->value.begin(), u.angles->value.end());
        WaveletUnit<To> out = make_replacement<To>(u.mode, u.channels, LatticeAngles(std::move(a)));
        for (size_t i = 0; i < 4; ++i) out.weights[i] = static_cast<To>(u.weights[i]);
        out.bias = static_cast<To>(u.bias);
        return out;
    };
    dst.stem = cast_conv(src.stem);
    dst.main_conv = cast_conv(src.main_conv);
    dst.shortcut_proj = cast_conv(src.shortcut_proj);
    dst.head = Linear<To>(src.head.in_features, src.head.out_features);
    for (size_t i = 0; i < src.head.w.size(); ++i) dst.head.w[i] = static_cast<To>(src.head.w[i]);
    for (size_t i = 0; i < src.head.b.size(); ++i) dst.head.b[i] = static_cast<To>(src.head.b[i]);
    if (src.pooling == ToyNet<From>::Pooling::wavelet) {
        dst.unit_pool = cast_unit(src.unit_pool);
        dst.unit_main = cast_unit(src.unit_main);
        dst.unit_shortcut = cast_unit(src.unit_shortcut);
    }
    return dst;
}

template <typename T>
struct ToyNetCache {
    Tensor3<T> input;
    Tensor3<T> stem_pre, stem_act;
    UnitCache<T> pool_cache;
    Tensor3<T> pooled;
    Tensor3<T> main_pre, main_act;
    UnitCache<T> main_cache;
    Tensor3<T> main_out;
    UnitCache<T> shortcut_cache;
    Tensor3<T> shortcut_small, shortcut_out;
    Tensor3<T> sum_pre, sum_act;
    std::vector<T> pooled_vec;
    std::vector<T> logits;
};

template <typename T>
std::vector<T> toynet_forward(const ToyNet<T>& net, const Tensor3<T>& x, ToyNetCache<T>* cache) {
    ToyNetCache<T> local;
    ToyNetCache<T>& c = cache ? *cache : local;
    c.input = x;
    c.stem_pre = net.stem.forward(x);
    c.stem_act = relu(c.stem_pre);
    if (net.has_units())
        c.pooled = unit_forward(net.unit_pool, c.stem_act, cache ? &c.pool_cache : nullptr);
    else
        c.pooled = avgpool2x2(c.stem_act);
    c.main_pre = net.main_conv.forward(c.pooled);
    c.main_act = relu(c.main_pre);
    if (net.has_units()) {
        c.main_out = unit_forward(net.unit_main, c.main_act, cache ? &c.main_cache : nullptr);
        c.shortcut_small =
            unit_forward(net.unit_shortcut, c.pooled, cache ? &c.shortcut_cache : nullptr);
    } else {
        c.main_out = avgpool2x2(c.main_act);
        c.shortcut_small = avgpool2x2(c.pooled);
    }
    c.shortcut_out = net.shortcut_proj.forward(c.shortcut_small);
    if (!c.main_out.same_shape(c.shortcut_out))
        throw DimensionError("toynet: branch shapes disagree");
    c.sum_pre = c.main_out;
    for (size_t i = 0; i < c.sum_pre.v.size(); ++i) c.sum_pre.v[i] += c.shortcut_out.v[i];
    c.sum_act = relu(c.sum_pre);
    c.pooled_vec = global_avg_pool(c.sum_act);
    c.logits = net.head.forward(c.pooled_vec);
    return c.logits;
}

// Accumulates parameter gradients for one sample given d(loss)/d(logits).
template <typename T>
void toynet_backward(ToyNet<T>& net, ToyNetCache<T>& c, std::span<const T> dlogits) {
    std::vector<T> gpool = net.head.backward(c.pooled_vec, dlogits);
    Tensor3<T> gsum_act = global_avg_pool_backward<T>(c.sum_act.rows, c.sum_act.cols, gpool);
    Tensor3<T> gsum = relu_backward(c.sum_pre, gsum_act);

    Tensor3<T> gshort_small = net.shortcut_proj.backward(c.shortcut_small, gsum);
    Tensor3<T> gpooled(c.pooled.channels, c.pooled.rows, c.pooled.cols);
    Tensor3<T> gmain_act;
    if (net.has_units()) {
        gpooled = unit_backward(net.unit_shortcut, c.pooled, c.shortcut_cache, gshort_small);
        gmain_act = unit_backward(net.unit_main, c.main_act, c.main_cache, gsum);
    } else {
        gpooled = avgpool2x2_backward(gshort_small);
        gmain_act = avgpool2x2_backward(gsum);
    }
    Tensor3<T> gmain_pre = relu_backward(c.main_pre, gmain_act);
    Tensor3<T> gpooled_main = net.main_conv.backward(c.pooled, gmain_pre);
    for (size_t i = 0; i < gpooled.v.size(); ++i) gpooled.v[i] += gpooled_main.v[i];

    Tensor3<T> gstem_act;
    if (net.has_units())
        gstem_act = unit_backward(net.unit_pool, c.stem_act, c.pool_cache, gpooled);
    else
        gstem_act = avgpool2x2_backward(gpooled);
    Tensor3<T> gstem_pre = relu_backward(c.stem_pre, gstem_act);
    net.stem.backward(c.input, gstem_pre);
}

// Flat view of every trainable parameter, in a stable order shared by the
// optimizer and the checkpoint format.
template <typename T>
struct ParamRef {
    std::string name;
    T* value = nullptr;
    T* grad = nullptr;
    size_t size = 0;
};

template <typename T>
void append_unit_params(std::vector<ParamRef<T>>& out, WaveletUnit<T>& u, const std::string& prefix) {
    out.push_back({prefix + ".angles", u.angles->value.data(), u.angles->grad.data(),
                   u.angles->value.size()});
    out.push_back({prefix + ".weights", u.weights.data(), u.weight_grad.data(), u.weights.size()});
    out.push_back({prefix + ".bias", &u.bias, &u.bias_grad, 1});
}

template <typename T>
std::vector<ParamRef<T>> parameters(ToyNet<T>& net) {
    std::vector<ParamRef<T>> out;
    out.push_back({"stem.w", net.stem.w.data(), net.stem.gw.data(), net.stem.w.size()});
    out.push_back({"stem.b", net.stem.b.data(), net.stem.gb.data(), net.stem.b.size()});
    if (net.has_units()) append_unit_params(out, net.unit_pool, "unit_pool");
    out.push_back({"main_conv.w", net.main_conv.w.data(), net.main_conv.gw.data(), net.main_conv.w.size()});
    out.push_back({"main_conv.b", net.main_conv.b.data(), net.main_conv.gb.data(), net.main_conv.b.size()});
    if (net.has_units()) {
        append_unit_params(out, net.unit_main, "unit_main");
        append_unit_params(out, net.unit_shortcut, "unit_shortcut");
    }
    out.push_back({"shortcut_proj.w", net.shortcut_proj.w.data(), net.shortcut_proj.gw.data(),
                   net.shortcut_proj.w.size()});
    out.push_back({"shortcut_proj.b", net.shortcut_proj.b.data(), net.shortcut_proj.gb.data(),
                   net.shortcut_proj.b.size()});
    out.push_back({"head.w", net.head.w.data(), net.head.gw.data(), net.head.w.size()});
    out.push_back({"head.b", net.head.b.data(), net.head.gb.data(), net.head.b.size()});
    return out;
}

template <typename T>
size_t parameter_count(ToyNet<T>& net) {
    size_t n = 0;
    for (const auto& p : parameters(net)) n += p.size;
    return n;
}

}  // namespace wavelat
