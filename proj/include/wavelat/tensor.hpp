#pragma once

#include <cstddef>
#include <vector>

#include "wavelat/errors.hpp"

namespace wavelat {

// Channel-major dense tensor: channels x rows x cols, each plane row-major.
template <typename T>
struct Tensor3 {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Tensor3() = default;
    Tensor3(int c, int r, int w)
        : channels(c), rows(r), cols(w), v(static_cast<size_t>(c) * r * w, T(0)) {
        if (c < 0 || r < 0 || w < 0) throw DimensionError("tensor dimensions must be non-negative");
    }

    size_t size() const { return v.size(); }
    size_t plane_size() const { return static_cast<size_t>(rows) * cols; }
    T* plane(int c) { return v.data() + static_cast<size_t>(c) * plane_size(); }
    const T* plane(int c) const { return v.data() + static_cast<size_t>(c) * plane_size(); }
    T& at(int c, int r, int w) { return v[(static_cast<size_t>(c) * rows + r) * cols + w]; }
    T at(int c, int r, int w) const { return v[(static_cast<size_t>(c) * rows + r) * cols + w]; }
    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    bool same_shape(const Tensor3& o) const {
        return channels == o.channels && rows == o.rows && cols == o.cols;
    }
};

template <typename To, typename From>
Tensor3<To> tensor_cast(const Tensor3<From>& x) {
    Tensor3<To> y(x.channels, x.rows, x.cols);
    for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = static_cast<To>(x.v[i]);
    return y;
}

}  // namespace wavelat
