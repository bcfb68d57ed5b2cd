#include "wavelat/dwt2d.hpp"

#include <sstream>

#include "wavelat/errors.hpp"
#include "wavelat/sepfilter.hpp"

namespace wavelat {
namespace {

void check_signal_length(int n, int taps) {
    if (n < 2 || n % 2 != 0) {
        std::ostringstream msg;
        msg << "dwt2: signal length " << n << " must be even and at least 2";
        throw DimensionError(msg.str());
    }
    if (n < taps) {
        std::ostringstream msg;
        msg << "dwt2: signal length " << n << " is shorter than the " << taps
            << "-tap filter";
        throw DimensionError(msg.str());
    }
}

void check_square(const Mat& x, int taps) {
    if (x.rows != x.cols) {
        std::ostringstream msg;
        msg << "dwt2: image must be square, got " << x.rows << "x" << x.cols;
        throw DimensionError(msg.str());
    }
    check_signal_length(x.rows, taps);
}

}  // namespace

Dwt2dOperators build_operators(const FilterBank& bank, int n) {
    check_signal_length(n, bank.taps());
    Dwt2dOperators ops{Mat(n / 2, n), Mat(n / 2, n)};
    for (int r = 0; r < n / 2; ++r) {
        for (int k = 0; k < bank.taps(); ++k) {
            const int c = (2 * r + k) % n;
            ops.lowpass(r, c) = bank.h0[k];
            ops.highpass(r, c) = bank.h1[k];
        }
    }
    return ops;
}

SubbandSet dwt2(const FilterBank& bank, const Mat& x) {
    check_square(x, bank.taps());
    const int n = x.rows;
    const int half = n / 2;
    const std::span<const double> h0(bank.h0);
    const std::span<const double> h1(bank.h1);

    // Vertical pass (filter down the rows), then horizontal on each result.
    Mat low(half, n), high(half, n);
    detail::decimate_vertical(x.a.data(), n, n, h0, low.a.data());
    detail::decimate_vertical(x.a.data(), n, n, h1, high.a.data());

    SubbandSet bands{Mat(half, half), Mat(half, half), Mat(half, half), Mat(half, half)};
    detail::decimate_horizontal(low.a.data(), half, n, h0, bands.ll.a.data());
    detail::decimate_horizontal(low.a.data(), half, n, h1, bands.hl.a.data());
    detail::decimate_horizontal(high.a.data(), half, n, h0, bands.lh.a.data());
    detail::decimate_horizontal(high.a.data(), half, n, h1, bands.hh.a.data());
    return bands;
}

Mat idwt2(const FilterBank& bank, const SubbandSet& bands) {
    const int half = bands.ll.rows;
    const Mat* all[] = {&bands.ll, &bands.lh, &bands.hl, &bands.hh};
    for (const Mat* b : all)
        if (b->rows != half || b->cols != half)
            throw DimensionError("idwt2: subbands must share one square shape");
    const int n = 2 * half;
    check_signal_length(n, bank.taps());
    const std::span<const double> h0(bank.h0);
    const std::span<const double> h1(bank.h1);

    Mat low(half, n), high(half, n);
    detail::expand_horizontal_accum(bands.ll.a.data(), half, n, h0, low.a.data());
    detail::expand_horizontal_accum(bands.hl.a.data(), half, n, h1, low.a.data());
    detail::expand_horizontal_accum(bands.lh.a.data(), half, n, h0, high.a.data());
    detail::expand_horizontal_accum(bands.hh.a.data(), half, n, h1, high.a.data());

    Mat x(n, n);
    detail::expand_vertical_accum(low.a.data(), n, n, h0, x.a.data());
    detail::expand_vertical_accum(high.a.data(), n, n, h1, x.a.data());
    return x;
}

}  // namespace wavelat
