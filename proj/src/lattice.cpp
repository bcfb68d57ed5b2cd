#include "wavelat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "wavelat/errors.hpp"

namespace wavelat {
namespace {

constexpr double kPi = std::numbers::pi;

// Canonical lowpass coefficients, 17 significant digits. The tables are
// cross-checked in the unit tests against the bank invariants and against
// angle-fit round-trips, not trusted blindly.
const std::vector<double> kHaarH0 = {
    0.70710678118654752, 0.70710678118654752};
const std::vector<double> kDb2H0 = {
    0.48296291314453416, 0.83651630373780794,
    0.22414386804201339, -0.12940952255126037};
const std::vector<double> kDb3H0 = {
    0.33267055295008263, 0.80689150931109255,
    0.45987750211849154, -0.13501102001025458,
    -0.085441273882026658, 0.035226291885709533};
const std::vector<double> kDb4H0 = {
    0.23037781330889651, 0.71484657055291567,
    0.63088076792985892, -0.027983769416859854,
    -0.18703481171909309, 0.030841381835560764,
    0.032883011666885197, -0.010597401785069032};

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double energy(std::span<const double> v) {
    double e = 0.0;
    for (double x : v) e += x * x;
    return e;
}

// Max-abs inner product of h0 with its even shifts, excluding lag zero.
double max_double_shift(std::span<const double> h0) {
    const int n = static_cast<int>(h0.size());
    double worst = 0.0;
    for (int k = 1; 2 * k < n; ++k) {
        double dot = 0.0;
        for (int i = 2 * k; i < n; ++i) dot += h0[i] * h0[i - 2 * k];
        worst = std::max(worst, std::abs(dot));
    }
    return worst;
}

// One cascade stage: delay the highpass branch by two samples, then mix the
// branches with a plane rotation. Grows both filters by two taps.
void cascade_stage(double c, double s, std::vector<double>& a, std::vector<double>& b) {
    const int n = static_cast<int>(a.size());
    std::vector<double> ap(n + 2, 0.0), bz(n + 2, 0.0);
    std::copy(a.begin(), a.end(), ap.begin());
    std::copy(b.begin(), b.end(), bz.begin() + 2);
    a.assign(n + 2, 0.0);
    b.assign(n + 2, 0.0);
    for (int i = 0; i < n + 2; ++i) {
        a[i] = c * ap[i] - s * bz[i];
        b[i] = s * ap[i] + c * bz[i];
    }
}

std::vector<double> cascade_h0(std::span<const double> angles) {
    const double c0 = std::cos(angles[0]);
    const double s0 = std::sin(angles[0]);
    std::vector<double> a = {c0, s0};
    std::vector<double> b = {s0, -c0};
    for (size_t m = 1; m < angles.size(); ++m)
        cascade_stage(std::cos(angles[m]), std::sin(angles[m]), a, b);
    return a;
}

std::string sv(std::string_view s) { return std::string(s); }

}  // namespace

LatticeAngles::LatticeAngles(std::vector<double> v) : values(std::move(v)) {
    if (values.empty()) throw ConfigError("lattice angles: need at least one angle");
    if (!all_finite(values)) throw ConfigError("lattice angles: non-finite value");
}

FilterBank lattice_to_filters(const LatticeAngles& angles) {
    FilterBank bank;
    bank.h0 = cascade_h0(angles.values);
    const int n = static_cast<int>(bank.h0.size());
    // The cascade's highpass branch equals the alternating flip of h0;
    // deriving it from h0 makes the invariant exact by construction.
    bank.h1.resize(n);
    for (int i = 0; i < n; ++i)
        bank.h1[i] = (i % 2 == 0 ? 1.0 : -1.0) * bank.h0[n - 1 - i];
    bank.f0.assign(bank.h0.rbegin(), bank.h0.rend());
    bank.f1.assign(bank.h1.rbegin(), bank.h1.rend());
    return bank;
}

Mat filters_jacobian(const LatticeAngles& angles) {
    const int m = angles.stages();
    const int n = 2 * m;
    // Forward-mode derivatives through the cascade: alongside the filters,
    // carry d(a)/d(theta_j) and d(b)/d(theta_j) for every angle.
    const double c0 = std::cos(angles.values[0]);
    const double s0 = std::sin(angles.values[0]);
    std::vector<double> a = {c0, s0};
    std::vector<double> b = {s0, -c0};
    std::vector<std::vector<double>> da(m, std::vector<double>(2, 0.0));
    std::vector<std::vector<double>> db(m, std::vector<double>(2, 0.0));
    da[0] = {-s0, c0};
    db[0] = {c0, s0};

    for (int stage = 1; stage < m; ++stage) {
        const double c = std::cos(angles.values[stage]);
        const double s = std::sin(angles.values[stage]);
        const int len = static_cast<int>(a.size());
        std::vector<double> ap(len + 2, 0.0), bz(len + 2, 0.0);
        std::copy(a.begin(), a.end(), ap.begin());
        std::copy(b.begin(), b.end(), bz.begin() + 2);
        for (int j = 0; j < m; ++j) {
            std::vector<double> dap(len + 2, 0.0), dbz(len + 2, 0.0);
            std::copy(da[j].begin(), da[j].end(), dap.begin());
            std::copy(db[j].begin(), db[j].end(), dbz.begin() + 2);
            da[j].assign(len + 2, 0.0);
            db[j].assign(len + 2, 0.0);
            for (int i = 0; i < len + 2; ++i) {
                da[j][i] = c * dap[i] - s * dbz[i];
                db[j][i] = s * dap[i] + c * dbz[i];
                if (j == stage) {
                    da[j][i] += -s * ap[i] - c * bz[i];
                    db[j][i] += c * ap[i] - s * bz[i];
                }
            }
        }
        a.assign(len + 2, 0.0);
        b.assign(len + 2, 0.0);
        for (int i = 0; i < len + 2; ++i) {
            a[i] = c * ap[i] - s * bz[i];
            b[i] = s * ap[i] + c * bz[i];
        }
    }

    Mat jac(n, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) jac(i, j) = da[j][i];
    return jac;
}

double canonicalize_angle(double theta) {
    if (!std::isfinite(theta)) throw ConfigError("canonicalize_angle: non-finite angle");
    double t = std::fmod(theta, 2.0 * kPi);
    if (t <= -kPi) t += 2.0 * kPi;
    if (t > kPi) t -= 2.0 * kPi;
    return t;
}

namespace {

struct Candidate {
    std::vector<double> theta;
    double cost = 0.0;      // sum of squared coefficient errors
    double residual = 0.0;  // max-abs coefficient error
};

void eval_candidate(Candidate& c, std::span<const double> target) {
    const std::vector<double> h0 = cascade_h0(c.theta);
    c.cost = 0.0;
    c.residual = 0.0;
    for (size_t i = 0; i < target.size(); ++i) {
        const double r = h0[i] - target[i];
        c.cost += r * r;
        c.residual = std::max(c.residual, std::abs(r));
    }
}

// Levenberg-Marquardt refinement of one start. The Jacobian is analytic,
// so each iteration is one cascade plus a tiny linear solve.
void refine(Candidate& c, std::span<const double> target) {
    const int m = static_cast<int>(c.theta.size());
    const int n = static_cast<int>(target.size());
    double lambda = 1e-4;
    eval_candidate(c, target);
    for (int iter = 0; iter < 300; ++iter) {
        if (c.cost < 1e-30) break;
        const LatticeAngles cur(c.theta);
        const std::vector<double> h0 = cascade_h0(c.theta);
        const Mat jac = filters_jacobian(cur);
        std::vector<double> grad(m, 0.0);
        Mat jtj(m, m);
        for (int i = 0; i < n; ++i) {
            const double r = h0[i] - target[i];
            for (int j = 0; j < m; ++j) grad[j] += jac(i, j) * r;
        }
        for (int p = 0; p < m; ++p)
            for (int q = 0; q < m; ++q) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += jac(i, p) * jac(i, q);
                jtj(p, q) = s;
            }
        bool stepped = false;
        for (int attempt = 0; attempt < 24 && !stepped; ++attempt) {
            Mat damped = jtj;
            for (int p = 0; p < m; ++p) damped(p, p) += lambda;
            std::vector<double> delta = grad;
            try {
                solve_inplace(damped, delta);
            } catch (const NumericError&) {
                lambda *= 10.0;
                continue;
            }
            Candidate trial = c;
            double step = 0.0;
            for (int p = 0; p < m; ++p) {
                trial.theta[p] -= delta[p];
                step = std::max(step, std::abs(delta[p]));
            }
            eval_candidate(trial, target);
            if (trial.cost < c.cost) {
                c = trial;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (step < 1e-15) return;
            } else {
                lambda *= 10.0;
                if (step < 1e-15) return;
            }
        }
        if (!stepped) return;
    }
}

// The lattice map is many-to-one: shifting any even number of stages by pi
// negates an even number of cascade factors, which cancels and leaves h0
// unchanged. Pick the canonical representative with every later stage in
// (-pi/2, pi/2] and the shift parity absorbed into the first angle.
void canonicalize_solution(std::vector<double>& theta) {
    int shifts = 0;
    for (size_t m = 1; m < theta.size(); ++m) {
        double t = canonicalize_angle(theta[m]);
        if (t > kPi / 2) {
            t -= kPi;
            ++shifts;
        } else if (t <= -kPi / 2) {
            t += kPi;
            ++shifts;
        }
        theta[m] = t;
    }
    theta[0] = canonicalize_angle(theta[0] + (shifts % 2 != 0 ? kPi : 0.0));
}

}  // namespace

FitResult fit_angles(std::span<const double> target_h0, int restarts) {
    const int n = static_cast<int>(target_h0.size());
    if (restarts < 1) throw ConfigError("fit_angles: restarts must be positive");
    if (n < 2 || n % 2 != 0)
        throw DataError("fit_angles: target length must be even and at least 2");
    if (!all_finite(target_h0)) throw DataError("fit_angles: non-finite target coefficient");

    const double e = energy(target_h0);
    if (std::abs(e - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << "fit_angles: target is not orthogonal (energy " << e
            << " deviates from 1 by more than 1e-6)";
        throw DataError(msg.str());
    }
    const double shift = max_double_shift(target_h0);
    if (shift > 1e-6) {
        std::ostringstream msg;
        msg << "fit_angles: target is not orthogonal (double-shift product " << shift
            << " exceeds 1e-6)";
        throw DataError(msg.str());
    }

    const int m = n / 2;
    Candidate best;
    best.residual = std::numeric_limits<double>::infinity();
    best.cost = std::numeric_limits<double>::infinity();
    int used = 0;

    // A single rotation inverts in closed form; use it as the first start.
    if (m == 1) {
        Candidate c;
        c.theta = {std::atan2(target_h0[1], target_h0[0])};
        refine(c, target_h0);
        best = c;
        ++used;
    }

    for (int r = 0; r < restarts && best.residual > 1e-12; ++r) {
        std::mt19937 rng(12345u + 977u * static_cast<unsigned>(r));
        std::uniform_real_distribution<double> uni(-kPi, kPi);
        Candidate c;
        c.theta.resize(m);
        for (int j = 0; j < m; ++j) c.theta[j] = uni(rng);
        refine(c, target_h0);
        ++used;
        if (c.cost < best.cost) best = c;
    }

    canonicalize_solution(best.theta);
    refine(best, target_h0);  // polish away the rounding from the pi shifts
    eval_candidate(best, target_h0);
    if (!(best.residual <= 1e-8)) {
        std::ostringstream msg;
        msg << "fit_angles: no restart converged; best residual " << best.residual
            << " exceeds 1e-8 after " << used << " starts";
        throw NumericError(msg.str());
    }
    return FitResult{LatticeAngles(best.theta), best.residual, used};
}

const std::vector<std::string>& named_wavelets() {
    static const std::vector<std::string> names = {"haar", "db2", "db3", "db4"};
    return names;
}

bool is_named_wavelet(std::string_view name) {
    const auto& names = named_wavelets();
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::span<const double> named_wavelet_h0(std::string_view name) {
    if (name == "haar") return kHaarH0;
    if (name == "db2") return kDb2H0;
    if (name == "db3") return kDb3H0;
    if (name == "db4") return kDb4H0;
    throw ConfigError("unknown wavelet '" + sv(name) + "' (expected haar, db2, db3 or db4)");
}

LatticeAngles angles_for_wavelet(std::string_view name) {
    return fit_angles(named_wavelet_h0(name)).angles;
}

void check_bank_invariants(const FilterBank& bank) {
    const int n = bank.taps();
    if (n < 2 || n % 2 != 0) throw DataError("bank: tap count must be even and at least 2");
    if (static_cast<int>(bank.h1.size()) != n || static_cast<int>(bank.f0.size()) != n ||
        static_cast<int>(bank.f1.size()) != n)
        throw DataError("bank: filter lengths disagree");
    if (!all_finite(bank.h0) || !all_finite(bank.h1) || !all_finite(bank.f0) ||
        !all_finite(bank.f1))
        throw DataError("bank: non-finite coefficient");

    const double e = energy(bank.h0);
    if (std::abs(e - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "bank: h0 energy " << e << " violates unit-energy invariant (tol 1e-12)";
        throw DataError(msg.str());
    }
    const double shift = max_double_shift(bank.h0);
    if (shift > 1e-10) {
        std::ostringstream msg;
        msg << "bank: double-shift product " << shift
            << " violates orthogonality invariant (tol 1e-10)";
        throw DataError(msg.str());
    }
    for (int i = 0; i < n; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        if (bank.h1[i] != sign * bank.h0[n - 1 - i])
            throw DataError("bank: h1 violates the alternating-flip invariant");
        if (bank.f0[i] != bank.h0[n - 1 - i] || bank.f1[i] != bank.h1[n - 1 - i])
            throw DataError("bank: synthesis filters are not time-reversed analysis filters");
    }
}

nlohmann::json bank_to_json(const LatticeAngles& angles, const FilterBank& bank) {
    if (angles.taps() != bank.taps())
        throw ConfigError("bank_to_json: angle count does not match filter length");
    nlohmann::json j;
    j["taps"] = bank.taps();
    j["angles"] = angles.values;
    j["h0"] = bank.h0;
    j["h1"] = bank.h1;
    return j;
}

BankRecord bank_from_json(const nlohmann::json& j) {
    BankRecord rec;
    int taps = 0;
    try {
        taps = j.at("taps").get<int>();
        rec.angles = LatticeAngles(j.at("angles").get<std::vector<double>>());
        rec.bank.h0 = j.at("h0").get<std::vector<double>>();
        rec.bank.h1 = j.at("h1").get<std::vector<double>>();
    } catch (const ConfigError& e) {
        throw DataError(std::string("bank json: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bank json: ") + e.what());
    }
    if (taps != static_cast<int>(rec.bank.h0.size()))
        throw DataError("bank json: taps field disagrees with h0 length");
    if (rec.angles.taps() != taps)
        throw DataError("bank json: angle count does not match taps");
    const int n = taps;
    rec.bank.f0.assign(rec.bank.h0.rbegin(), rec.bank.h0.rend());
    rec.bank.f1.assign(rec.bank.h1.rbegin(), rec.bank.h1.rend());
    check_bank_invariants(rec.bank);
    // The stored angles must reproduce the stored coefficients; a mismatch
    // means the file was edited inconsistently.
    const FilterBank from_angles = lattice_to_filters(rec.angles);
    for (int i = 0; i < n; ++i)
        if (std::abs(from_angles.h0[i] - rec.bank.h0[i]) > 1e-8)
            throw DataError("bank json: angles do not reproduce h0 (tol 1e-8)");
    return rec;
}

}  // namespace wavelat
