#pragma once

#include <span>
#include <vector>

#include "wavelat/lattice.hpp"

namespace wavelat {

// Uniform frequency grid on [0, pi] with `intervals + 1` points w_i = i*pi/K
// and a stopband starting at the grid point nearest to stopband_edge.
struct SpectralGrid {
    int intervals = 500;                       // K
    double stopband_edge = 0.6 * 3.14159265358979323846;  // w_s, radians

    void validate() const;                     // throws ConfigError
    int stopband_index() const;                // round(K * w_s / pi)
    double frequency(int i) const;             // i * pi / K
};

SpectralGrid default_lowpass_grid();   // K = 500, w_s = 0.6 pi
SpectralGrid default_highpass_grid();  // K = 500, w_s = 0.4 pi (diagnostic)

// Sums in a fixed binary-tree order, independent of any threading or
// chunking, so repeated runs reduce in exactly the same sequence.
double pairwise_sum(std::span<const double> v);

// |H(e^{jw})|^2 for a real FIR filter h.
double magnitude_response_sq(std::span<const double> h, double w);

// Riemann approximation of the normalized stopband energy:
//   (1 / 2K) * sum_{i = i_s}^{K} |H(e^{j i pi / K})|^2
// Converges to the exact integral (1/2pi) int_{w_s}^{pi} |H|^2 dw as O(1/K).
double stopband_energy_numeric(std::span<const double> h, const SpectralGrid& grid);

// Scale-invariant stopband loss: stopband energy divided by filter energy.
double sbe_loss(std::span<const double> h, const SpectralGrid& grid);

// Analytic d(sbe_loss)/d(h[k]).
std::vector<double> sbe_loss_gradient_coeffs(std::span<const double> h,
                                             const SpectralGrid& grid);

// Analytic d(sbe_loss(h0(angles)))/d(angles), chained through the lattice
// Jacobian. Always evaluated in double precision.
std::vector<double> sbe_loss_gradient(const LatticeAngles& angles, const SpectralGrid& grid);

// Convex combination (1 - alpha) * task + alpha * stopband. Throws
// ConfigError for alpha outside [0, 1], NumericError for non-finite terms.
double total_loss(double task_loss, double stopband_loss, double alpha);

}  // namespace wavelat
