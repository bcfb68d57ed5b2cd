#include "wavelat/spectral.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "wavelat/errors.hpp"

namespace wavelat {
namespace {

constexpr double kPi = std::numbers::pi;

double filter_energy(std::span<const double> h) {
    double e = 0.0;
    for (double x : h) e += x * x;
    return e;
}

void check_filter(std::span<const double> h) {
    if (h.empty()) throw DimensionError("spectral: empty filter");
    for (double x : h)
        if (!std::isfinite(x)) throw NumericError("spectral: non-finite filter coefficient");
}

}  // namespace

void SpectralGrid::validate() const {
    if (intervals < 1) throw ConfigError("spectral grid: intervals must be at least 1");
    if (!(stopband_edge > 0.0) || !(stopband_edge < kPi))
        throw ConfigError("spectral grid: stopband edge must lie strictly inside (0, pi)");
    if (stopband_index() < 1)
        throw ConfigError("spectral grid: stopband edge below grid resolution");
}

int SpectralGrid::stopband_index() const {
    return static_cast<int>(std::lround(intervals * stopband_edge / kPi));
}

double SpectralGrid::frequency(int i) const { return i * kPi / intervals; }

SpectralGrid default_lowpass_grid() { return SpectralGrid{500, 0.6 * kPi}; }
SpectralGrid default_highpass_grid() { return SpectralGrid{500, 0.4 * kPi}; }

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double magnitude_response_sq(std::span<const double> h, double w) {
    check_filter(h);
    double re = 0.0, im = 0.0;
    for (size_t n = 0; n < h.size(); ++n) {
        re += h[n] * std::cos(w * static_cast<double>(n));
        im += h[n] * std::sin(w * static_cast<double>(n));
    }
    return re * re + im * im;
}

double stopband_energy_numeric(std::span<const double> h, const SpectralGrid& grid) {
    check_filter(h);
    grid.validate();
    const int first = grid.stopband_index();
    std::vector<double> terms;
    terms.reserve(static_cast<size_t>(grid.intervals - first + 1));
    for (int i = first; i <= grid.intervals; ++i)
        terms.push_back(magnitude_response_sq(h, grid.frequency(i)));
    return pairwise_sum(terms) / (2.0 * grid.intervals);
}

double sbe_loss(std::span<const double> h, const SpectralGrid& grid) {
    const double e = filter_energy(h);
    if (e <= 0.0) throw NumericError("sbe_loss: zero-energy filter");
    return stopband_energy_numeric(h, grid) / e;
}

std::vector<double> sbe_loss_gradient_coeffs(std::span<const double> h,
                                             const SpectralGrid& grid) {
    check_filter(h);
    grid.validate();
    const double e = filter_energy(h);
    if (e <= 0.0) throw NumericError("sbe_loss_gradient: zero-energy filter");
    const int first = grid.stopband_index();
    const int taps = static_cast<int>(h.size());
    const size_t points = static_cast<size_t>(grid.intervals - first + 1);

    // Per-frequency real/imaginary parts of H, then the stopband sum and its
    // coefficient derivatives, each reduced with the same fixed-tree order.
    std::vector<double> re(points), im(points), terms(points);
    for (size_t p = 0; p < points; ++p) {
        const double w = grid.frequency(first + static_cast<int>(p));
        double r = 0.0, m = 0.0;
        for (int n = 0; n < taps; ++n) {
            r += h[n] * std::cos(w * n);
            m += h[n] * std::sin(w * n);
        }
        re[p] = r;
        im[p] = m;
        terms[p] = r * r + m * m;
    }
    const double sbe = pairwise_sum(terms) / (2.0 * grid.intervals);

    std::vector<double> grad(taps, 0.0);
    std::vector<double> contrib(points);
    for (int k = 0; k < taps; ++k) {
        for (size_t p = 0; p < points; ++p) {
            const double w = grid.frequency(first + static_cast<int>(p));
            contrib[p] = 2.0 * (re[p] * std::cos(w * k) + im[p] * std::sin(w * k));
        }
        const double dsbe = pairwise_sum(contrib) / (2.0 * grid.intervals);
        grad[k] = (dsbe * e - sbe * 2.0 * h[k]) / (e * e);
    }
    return grad;
}

std::vector<double> sbe_loss_gradient(const LatticeAngles& angles, const SpectralGrid& grid) {
    const FilterBank bank = lattice_to_filters(angles);
    const std::vector<double> gh = sbe_loss_gradient_coeffs(bank.h0, grid);
    const Mat jac = filters_jacobian(angles);
    std::vector<double> grad(angles.stages(), 0.0);
    for (int j = 0; j < jac.cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < jac.rows; ++i) s += jac(i, j) * gh[i];
        grad[j] = s;
    }
    return grad;
}

double total_loss(double task_loss, double stopband_loss, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        std::ostringstream msg;
        msg << "total_loss: alpha " << alpha << " outside [0, 1]";
        throw ConfigError(msg.str());
    }
    if (!std::isfinite(task_loss) || !std::isfinite(stopband_loss))
        throw NumericError("total_loss: non-finite loss term");
    return (1.0 - alpha) * task_loss + alpha * stopband_loss;
}

}  // namespace wavelat
