#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wavelat/mat.hpp"

namespace wavelat {

// Rotation angles parameterizing a two-channel orthogonal FIR filter bank.
// M angles produce filters with 2M taps. Orthogonality is structural: every
// finite angle vector maps to a paraunitary bank, so gradient steps on the
// angles can never leave the orthogonal family.
struct LatticeAngles {
    std::vector<double> values;  // radians

    LatticeAngles() = default;
    explicit LatticeAngles(std::vector<double> v);  // validates: non-empty, finite

    int stages() const { return static_cast<int>(values.size()); }
    int taps() const { return 2 * stages(); }
};

// Analysis pair (h0 lowpass, h1 highpass) and synthesis pair (f0, f1).
// Invariants maintained by construction:
//   sum h0[n]^2 == 1            (unit energy, within 1e-12)
//   sum h0[n] h0[n-2k] == 0     (double-shift orthogonality, within 1e-10)
//   h1[n] == (-1)^n h0[N-1-n]   (alternating flip, exact)
//   f0 = reverse(h0), f1 = reverse(h1)
struct FilterBank {
    std::vector<double> h0;
    std::vector<double> h1;
    std::vector<double> f0;
    std::vector<double> f1;

    int taps() const { return static_cast<int>(h0.size()); }
};

// Maps angles to filters through a cascade of plane rotations interleaved
// with two-sample delays on the highpass branch. Cost O(M^2).
FilterBank lattice_to_filters(const LatticeAngles& angles);

// Jacobian of the lowpass coefficients with respect to the angles:
// J(k, m) = d h0[k] / d angles[m], shape taps x stages.
Mat filters_jacobian(const LatticeAngles& angles);

// Wraps an angle into the canonical interval (-pi, pi].
double canonicalize_angle(double theta);

struct FitResult {
    LatticeAngles angles;
    double residual;  // max-abs coefficient error of the best fit
    int restarts_used;
};

// Recovers angles reproducing a target lowpass filter via multi-start
// Gauss-Newton on the coefficient residual. Restarts draw initial angles
// uniformly from (-pi, pi] with a fixed seed, so results are reproducible.
// Throws DataError if the target is not orthogonal to within 1e-6, and
// NumericError (reporting the best residual) if no start reaches 1e-8.
FitResult fit_angles(std::span<const double> target_h0, int restarts = 32);

// Built-in wavelets: "haar", "db2", "db3", "db4". Coefficients are stored
// to 17 significant digits and validated by the orthogonality invariants.
const std::vector<std::string>& named_wavelets();
bool is_named_wavelet(std::string_view name);
std::span<const double> named_wavelet_h0(std::string_view name);  // throws ConfigError
LatticeAngles angles_for_wavelet(std::string_view name);

// Validates the bank invariants listed on FilterBank; throws DataError with
// a diagnostic naming the first violated invariant.
void check_bank_invariants(const FilterBank& bank);

// JSON form: {"taps": N, "angles": [...], "h0": [...], "h1": [...]}.
// Loading re-derives the synthesis pair and re-checks all invariants.
nlohmann::json bank_to_json(const LatticeAngles& angles, const FilterBank& bank);

struct BankRecord {
    LatticeAngles angles;
    FilterBank bank;
};
BankRecord bank_from_json(const nlohmann::json& j);

}  // namespace wavelat
