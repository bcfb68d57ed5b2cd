#pragma once

#include "wavelat/lattice.hpp"
#include "wavelat/mat.hpp"

namespace wavelat {

// Decimated periodic analysis operators for signal length n: each is an
// (n/2) x n matrix with row r holding the filter at circular offset 2r, so
// left-multiplication filters and downsamples in one step.
struct Dwt2dOperators {
    Mat lowpass;   // rows built from h0
    Mat highpass;  // rows built from h1
};

// Requires n even and n >= filter length; throws DimensionError otherwise.
Dwt2dOperators build_operators(const FilterBank& bank, int n);

// One decomposition level of an n x n image: four (n/2) x (n/2) subbands.
// First letter is the vertical channel, second the horizontal: lh is
// highpass down the columns of pixels and lowpass along the rows.
struct SubbandSet {
    Mat ll, lh, hl, hh;
};

// Separable periodic analysis, numerically identical (to rounding) with the
// explicit operator products  ll = L X L^T,  lh = H X L^T,  hl = L X H^T,
// hh = H X H^T.  Requires X square with even size >= filter length.
SubbandSet dwt2(const FilterBank& bank, const Mat& x);

// Exact inverse of dwt2 for an orthogonal bank (perfect reconstruction).
// Implemented with the adjoint of the analysis kernels, which for this
// operator equals synthesis filtering with the time-reversed pair.
Mat idwt2(const FilterBank& bank, const SubbandSet& bands);

}  // namespace wavelat
