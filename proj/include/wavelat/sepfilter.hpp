#pragma once

#include <cstddef>
#include <span>

namespace wavelat::detail {

// Periodic decimate-by-two filtering kernels on row-major planes, plus their
// adjoints and filter-coefficient gradients. Templated so the 2-D transform
// runs in double while training layers run in float. Index convention keeps
// the even phase: output sample r draws from input samples 2r, 2r+1, ...
// with circular wrap.

// y[r][c] = sum_k f[k] * x[(2r + k) mod rows][c];  y has rows/2 rows.
template <typename T>
void decimate_vertical(const T* x, int rows, int cols, std::span<const T> f, T* y) {
    const int half = rows / 2;
    const int taps = static_cast<int>(f.size());
    for (int r = 0; r < half; ++r) {
        for (int c = 0; c < cols; ++c) y[static_cast<size_t>(r) * cols + c] = T(0);
        for (int k = 0; k < taps; ++k) {
            const int src = (2 * r + k) % rows;
            const T fk = f[k];
            const T* xr = x + static_cast<size_t>(src) * cols;
            T* yr = y + static_cast<size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) yr[c] += fk * xr[c];
        }
    }
}

// y[r][j] = sum_k f[k] * x[r][(2j + k) mod cols];  y has cols/2 columns.
template <typename T>
void decimate_horizontal(const T* x, int rows, int cols, std::span<const T> f, T* y) {
    const int half = cols / 2;
    const int taps = static_cast<int>(f.size());
    for (int r = 0; r < rows; ++r) {
        const T* xr = x + static_cast<size_t>(r) * cols;
        T* yr = y + static_cast<size_t>(r) * half;
        for (int j = 0; j < half; ++j) {
            T acc = T(0);
            for (int k = 0; k < taps; ++k) acc += f[k] * xr[(2 * j + k) % cols];
            yr[j] = acc;
        }
    }
}

// Adjoint of decimate_vertical: x[(2r + k) mod rows][c] += f[k] * y[r][c].
// Equivalent to periodic upsample-and-filter with the time-reversed filter.
template <typename T>
void expand_vertical_accum(const T* y, int rows, int cols, std::span<const T> f, T* x) {
    const int half = rows / 2;
    const int taps = static_cast<int>(f.size());
    for (int r = 0; r < half; ++r) {
        const T* yr = y + static_cast<size_t>(r) * cols;
        for (int k = 0; k < taps; ++k) {
            const int dst = (2 * r + k) % rows;
            const T fk = f[k];
            T* xr = x + static_cast<size_t>(dst) * cols;
            for (int c = 0; c < cols; ++c) xr[c] += fk * yr[c];
        }
    }
}

// Adjoint of decimate_horizontal: x[r][(2j + k) mod cols] += f[k] * y[r][j].
template <typename T>
void expand_horizontal_accum(const T* y, int rows, int cols, std::span<const T> f, T* x) {
    const int half = cols / 2;
    const int taps = static_cast<int>(f.size());
    for (int r = 0; r < rows; ++r) {
        const T* yr = y + static_cast<size_t>(r) * half;
        T* xr = x + static_cast<size_t>(r) * cols;
        for (int j = 0; j < half; ++j) {
            const T v = yr[j];
            for (int k = 0; k < taps; ++k) xr[(2 * j + k) % cols] += f[k] * v;
        }
    }
}

// d(loss)/d(f[k]) for decimate_vertical: g[k] += sum_{r,c} gy[r][c] * x[(2r+k) mod rows][c].
template <typename T>
void filter_grad_vertical(const T* gy, const T* x, int rows, int cols, int taps, T* g) {
    const int half = rows / 2;
    for (int k = 0; k < taps; ++k) {
        T acc = T(0);
        for (int r = 0; r < half; ++r) {
            const int src = (2 * r + k) % rows;
            const T* gr = gy + static_cast<size_t>(r) * cols;
            const T* xr = x + static_cast<size_t>(src) * cols;
            for (int c = 0; c < cols; ++c) acc += gr[c] * xr[c];
        }
        g[k] += acc;
    }
}

// d(loss)/d(f[k]) for decimate_horizontal: g[k] += sum_{r,j} gy[r][j] * x[r][(2j+k) mod cols].
template <typename T>
void filter_grad_horizontal(const T* gy, const T* x, int rows, int cols, int taps, T* g) {
    const int half = cols / 2;
    for (int k = 0; k < taps; ++k) {
        T acc = T(0);
        for (int r = 0; r < rows; ++r) {
            const T* gr = gy + static_cast<size_t>(r) * half;
            const T* xr = x + static_cast<size_t>(r) * cols;
            for (int j = 0; j < half; ++j) acc += gr[j] * xr[(2 * j + k) % cols];
        }
        g[k] += acc;
    }
}

}  // namespace wavelat::detail
