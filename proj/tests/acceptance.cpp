// Acceptance gate. Each criterion prints exactly one PASS/FAIL verdict line
// with the measured quantities and the wall-clock budget it was held to;
// the exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "wavelat/dwt2d.hpp"
#include "wavelat/io.hpp"
#include "wavelat/lattice.hpp"
#include "wavelat/nn.hpp"
#include "wavelat/spectral.hpp"
#include "wavelat/train.hpp"

using namespace wavelat;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
    if (!pass) ++g_failures;
    std::printf("criterion %d: %s (%s)\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, format);
    std::vsnprintf(buf, sizeof buf, format, ap);
    va_end(ap);
    return buf;
}

void note(const std::string& line) { std::printf("    %s\n", line.c_str()); }

std::string join(const std::vector<double>& v, const char* format = "%.4f") {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(format, v[i]);
    }
    return out;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

int run_shell(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc)) return -1;
    return WEXITSTATUS(rc);
}

// ---- criterion 1: quadrature agrees with the closed-form integral ----------

void criterion1() {
    const FilterBank haar = lattice_to_filters(angles_for_wavelet("haar"));
    const SpectralGrid grid = default_lowpass_grid();

    double value = 0.0;
    double best_ms = 1e9;
    for (int rep = 0; rep < 32; ++rep) {
        const auto t0 = Clock::now();
        value = sbe_loss(haar.h0, grid);
        best_ms = std::min(best_ms, seconds_since(t0) * 1e3);
    }
    // Haar |H0|^2 = 2 cos^2(w/2); integrating over [0.6pi, pi] and dividing
    // by 2pi gives (0.4pi - sin 0.6pi) / (2pi).
    const double closed = (0.4 * std::numbers::pi - std::sin(0.6 * std::numbers::pi)) /
                          (2.0 * std::numbers::pi);
    const double err = std::abs(value - closed);
    verdict(1, err < 2e-3 && best_ms < 1.0,
            fmt("L_SBE %.6f vs closed form %.6f, err %.2e < 2e-3; %.4f ms < 1 ms", value,
                closed, err, best_ms));
}

// ---- criterion 2: every lattice point is a paraunitary bank ----------------

void criterion2() {
    const auto t0 = Clock::now();
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);

    double worst_energy = 0.0, worst_shift = 0.0;
    bool flip_exact = true;
    int checked = 0;
    for (int taps : {2, 4, 6, 8}) {
        for (int rep = 0; rep < 250; ++rep) {
            std::vector<double> theta(static_cast<size_t>(taps / 2));
            for (double& x : theta) x = u(rng);
            const FilterBank bank = lattice_to_filters(LatticeAngles(theta));

            double e = 0.0;
            for (double h : bank.h0) e += h * h;
            worst_energy = std::max(worst_energy, std::abs(e - 1.0));

            for (int m = 1; m < taps / 2; ++m) {
                double dot = 0.0;
                for (int k = 0; k + 2 * m < taps; ++k) dot += bank.h0[k] * bank.h0[k + 2 * m];
                worst_shift = std::max(worst_shift, std::abs(dot));
            }
            for (int i = 0; i < taps; ++i) {
                const double sign = i % 2 == 0 ? 1.0 : -1.0;
                flip_exact &= bank.h1[i] == sign * bank.h0[taps - 1 - i];
            }
            ++checked;
        }
    }
    const double secs = seconds_since(t0);
    verdict(2,
            checked == 1000 && worst_energy <= 1e-12 && worst_shift <= 1e-10 && flip_exact &&
                secs < 5.0,
            fmt("1000 banks: |energy-1| max %.2e <= 1e-12, shift max %.2e <= 1e-10, "
                "flip %s; %.2f s < 5 s",
                worst_energy, worst_shift, flip_exact ? "exact" : "BROKEN", secs));
}

// ---- criterion 3: perfect reconstruction and Parseval ----------------------

void criterion3() {
    const auto t0 = Clock::now();
    std::mt19937 rng(202);
    std::uniform_int_distribution<int> half(4, 32);  // even sizes 8..64
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    const char* names[] = {"haar", "db2", "db3", "db4"};
    FilterBank banks[4];
    for (int b = 0; b < 4; ++b) banks[b] = lattice_to_filters(angles_for_wavelet(names[b]));

    double worst_recon = 0.0, worst_energy = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int size = 2 * half(rng);
        Mat img(size, size);
        for (double& v : img.a) v = u(rng);
        double e_img = 0.0;
        for (double v : img.a) e_img += v * v;

        for (const FilterBank& bank : banks) {
            const SubbandSet bands = dwt2(bank, img);
            const Mat back = idwt2(bank, bands);
            worst_recon = std::max(worst_recon, max_abs_diff(img, back));

            double e_sub = 0.0;
            for (const Mat* m : {&bands.ll, &bands.lh, &bands.hl, &bands.hh})
                for (double v : m->a) e_sub += v * v;
            worst_energy = std::max(worst_energy, std::abs(e_sub - e_img) / e_img);
        }
    }
    const double secs = seconds_since(t0);
    verdict(3, worst_recon < 1e-9 && worst_energy < 1e-8 && secs < 10.0,
            fmt("100 images x 4 banks: recon max %.2e < 1e-9, energy rel err max %.2e < 1e-8; "
                "%.2f s < 10 s",
                worst_recon, worst_energy, secs));
}

// ---- criterion 4: analytic gradients match finite differences --------------

struct SampledParam {
    size_t param_index;
    size_t element;
    std::string name;
};

// 20 entries: every lattice angle plus a deterministic draw from the rest.
std::vector<SampledParam> sample_params(const std::vector<ParamRef<double>>& params) {
    std::vector<SampledParam> angles, others;
    for (size_t p = 0; p < params.size(); ++p) {
        for (size_t e = 0; e < params[p].size; ++e) {
            if (params[p].name.ends_with(".angles"))
                angles.push_back({p, e, params[p].name});
            else
                others.push_back({p, e, params[p].name});
        }
    }
    std::mt19937 rng(303);
    std::shuffle(others.begin(), others.end(), rng);
    std::vector<SampledParam> out = angles;
    for (size_t i = 0; i < others.size() && out.size() < 20; ++i) out.push_back(others[i]);
    return out;
}

void criterion4() {
    const auto t0 = Clock::now();
    std::mt19937 rng(404);
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    const SpectralGrid grid = default_lowpass_grid();
    const double h = 1e-6;

    // Stopband loss with respect to the rotation angles.
    double worst_sbe = 0.0;
    for (int taps : {2, 4, 6, 8}) {
        for (int rep = 0; rep < 3; ++rep) {
            std::vector<double> theta(static_cast<size_t>(taps / 2));
            for (double& x : theta) x = u(rng);
            const std::vector<double> grad = sbe_loss_gradient(LatticeAngles(theta), grid);
            for (size_t m = 0; m < theta.size(); ++m) {
                std::vector<double> tp = theta, tm = theta;
                tp[m] += h;
                tm[m] -= h;
                const double fd = (sbe_loss(lattice_to_filters(LatticeAngles(tp)).h0, grid) -
                                   sbe_loss(lattice_to_filters(LatticeAngles(tm)).h0, grid)) /
                                  (2 * h);
                worst_sbe = std::max(worst_sbe, std::abs(fd - grad[m]));
            }
        }
    }

    DatasetConfig dc;
    dc.images_per_class = 8;
    dc.image_size = 16;
    dc.seed = 3;
    const TextureDataset data = make_texture_dataset(dc);
    // Samples chosen so no ReLU pre-activation sits within the step of zero.
    const std::vector<int> batch = {0, 3, 9, 13, 16, 19};
    const double alpha = 0.5;

    // Full composite objective in double.
    std::mt19937 netrng(17);
    ToyNet<double> dnet =
        make_toynet<double>(ToyNet<double>::Pooling::wavelet, angles_for_wavelet("db2"), netrng);
    dnet.zero_grad();
    composite_batch(dnet, data, batch, alpha, grid, true);
    const auto dparams = parameters(dnet);
    const std::vector<SampledParam> picks = sample_params(dparams);
    int angle_count = 0;
    double worst_net = 0.0;
    for (const SampledParam& s : picks) {
        angle_count += s.name.ends_with(".angles") ? 1 : 0;
        const ParamRef<double>& p = dparams[s.param_index];
        const double saved = p.value[s.element];
        p.value[s.element] = saved + h;
        const double lp = composite_batch(dnet, data, batch, alpha, grid, false).total;
        p.value[s.element] = saved - h;
        const double lm = composite_batch(dnet, data, batch, alpha, grid, false).total;
        p.value[s.element] = saved;
        worst_net = std::max(worst_net, std::abs((lp - lm) / (2 * h) - p.grad[s.element]));
    }

    // The float training path against a double oracle at the same point.
    std::mt19937 frng(29);
    ToyNet<float> fnet =
        make_toynet<float>(ToyNet<float>::Pooling::wavelet, angles_for_wavelet("db2"), frng);
    fnet.zero_grad();
    composite_batch(fnet, data, batch, alpha, grid, true);
    ToyNet<double> oracle = cast_toynet<double>(fnet);
    const auto fparams = parameters(fnet);
    const auto oparams = parameters(oracle);
    double worst_float = 0.0;
    for (const SampledParam& s : sample_params(oparams)) {
        const ParamRef<double>& p = oparams[s.param_index];
        const double saved = p.value[s.element];
        p.value[s.element] = saved + h;
        const double lp = composite_batch(oracle, data, batch, alpha, grid, false).total;
        p.value[s.element] = saved - h;
        const double lm = composite_batch(oracle, data, batch, alpha, grid, false).total;
        p.value[s.element] = saved;
        const double fd = (lp - lm) / (2 * h);
        const double analytic = static_cast<double>(fparams[s.param_index].grad[s.element]);
        worst_float = std::max(worst_float, std::abs(fd - analytic) / std::max(1.0, std::abs(fd)));
    }

    const double secs = seconds_since(t0);
    verdict(4,
            worst_sbe <= 1e-6 && worst_net <= 1e-6 && angle_count >= 5 && worst_float <= 1e-3 &&
                secs < 30.0,
            fmt("sbe/angle max %.2e <= 1e-6, net max %.2e <= 1e-6 (20 params, %d angles), "
                "float path max %.2e <= 1e-3; %.1f s < 30 s",
                worst_sbe, worst_net, angle_count, worst_float, secs));
}

// ---- criterion 5: stopband energy falls as the constraint tightens ---------

TrainConfig sweep_config(const std::string& wavelet) {
    TrainConfig cfg;
    cfg.wavelet = wavelet;
    cfg.lr = 0.03;
    cfg.epochs = 20;
    cfg.batch_size = 32;
    cfg.seed = 1;
    cfg.data.images_per_class = 200;
    cfg.data.image_size = 32;
    cfg.data.seed = 7;
    cfg.data.noise_std = 0.55;
    return cfg;
}

// Non-increasing up to one small adjacent blip, and strictly lower at the
// tight end than at the loose end.
bool trend_ok(const std::vector<double>& m, std::string& summary) {
    int violations = 0;
    double worst = 0.0;
    for (size_t i = 0; i + 1 < m.size(); ++i) {
        if (m[i + 1] > m[i]) {
            ++violations;
            worst = std::max(worst, (m[i + 1] - m[i]) / m[i]);
        }
    }
    const bool strict_end = m.back() < m.front();
    summary = fmt("%d violation(s), worst %.1f%%, ends %.4f -> %.4f", violations, worst * 100.0,
                  m.front(), m.back());
    return violations <= 1 && worst < 0.05 && strict_end;
}

void criterion5() {
    const auto t0 = Clock::now();
    const std::vector<double> alphas = {0.0, 0.1, 0.25, 0.5, 0.75, 0.9};

    bool ok = true;
    std::string detail;
    for (const char* wavelet : {"db2", "db3"}) {
        const std::vector<TrainResult> results = alpha_sweep(sweep_config(wavelet), alphas);
        std::vector<double> final_sbe;
        for (const TrainResult& r : results) final_sbe.push_back(mean(r.unit_sbe));
        note(fmt("%s mean unit stopband loss by alpha: %s", wavelet,
                 join(final_sbe, "%.5f").c_str()));
        std::string summary;
        const bool wavelet_ok = trend_ok(final_sbe, summary);
        ok &= wavelet_ok;
        if (!detail.empty()) detail += "; ";
        detail += std::string(wavelet) + ": " + summary;
    }
    const double secs = seconds_since(t0);
    ok &= secs < 900.0;
    verdict(5, ok, detail + fmt("; %.0f s < 900 s", secs));
}

// ---- criterion 6: the constraint helps classification ----------------------

TrainConfig texture_config(const std::string& arch, double alpha, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.arch = arch;
    cfg.alpha = alpha;
    cfg.lr = 0.08;
    cfg.epochs = 16;
    cfg.batch_size = 20;
    cfg.seed = seed;
    cfg.data.images_per_class = 200;
    cfg.data.image_size = 32;
    cfg.data.seed = 7;
    cfg.data.noise_std = 0.70;
    return cfg;
}

void criterion6() {
    const auto t0 = Clock::now();
    const TextureDataset data = make_texture_dataset(texture_config("wavelet", 0.0, 1).data);

    std::vector<double> acc_constrained, acc_plain, acc_avg;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        acc_constrained.push_back(
            train_model(texture_config("wavelet", 0.75, seed), data).history.back().test_acc);
        acc_plain.push_back(
            train_model(texture_config("wavelet", 0.0, seed), data).history.back().test_acc);
        acc_avg.push_back(
            train_model(texture_config("average", 0.0, seed), data).history.back().test_acc);
    }
    note("alpha=0.75 accuracy by seed: " + join(acc_constrained));
    note("alpha=0    accuracy by seed: " + join(acc_plain));
    note("avg-pool   accuracy by seed: " + join(acc_avg));

    const double diff = mean(acc_constrained) - mean(acc_plain);
    const double pooled =
        std::sqrt((sample_var(acc_constrained) + sample_var(acc_plain)) / 2.0);
    const bool separated = diff > pooled;

    // Same seed, same data; only the downsampling mechanism differs.
    double worst_margin = 1.0;
    for (size_t i = 0; i < acc_constrained.size(); ++i)
        worst_margin = std::min(worst_margin, acc_constrained[i] - acc_avg[i]);
    const bool beats_baseline = worst_margin > 0.0;

    const double secs = seconds_since(t0);
    verdict(6, separated && beats_baseline && secs < 1800.0,
            fmt("mean diff %.3f > pooled sd %.3f: %s; min margin over avg-pool %+.3f > 0: %s; "
                "%.0f s < 1800 s",
                diff, pooled, separated ? "yes" : "NO", worst_margin,
                beats_baseline ? "yes" : "NO", secs));
}

// ---- criterion 7: canonical coefficients round-trip through the tools ------

void criterion7() {
    const auto t0 = Clock::now();

    // Daubechies-2 lowpass from the textbook closed form.
    const double s3 = std::sqrt(3.0), n = 4.0 * std::sqrt(2.0);
    const std::vector<double> db2 = {(1 + s3) / n, (3 + s3) / n, (3 - s3) / n, (1 - s3) / n};

    const FitResult fit = fit_angles(db2);
    const FilterBank bank = lattice_to_filters(fit.angles);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(bank.h0[i] - db2[i]));

    const fs::path dir =
        fs::temp_directory_path() / ("wavelat_acc_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    const std::string cli = WAVELAT_CLI_PATH;
    const std::string cd = "cd '" + dir.string() + "' && '" + cli + "' ";
    bool cli_ok = run_shell(cd + "design --wavelet db2 --out bank.json > /dev/null") == 0 &&
                  run_shell(cd + "analyze --bank bank.json --out resp.csv > /dev/null") == 0 &&
                  run_shell(cd + "fit --in bank.json --out fitted.json > /dev/null") == 0;
    double cli_worst = 1.0;
    if (cli_ok) {
        const nlohmann::json a = nlohmann::json::parse(read_text_file(dir / "bank.json"));
        const nlohmann::json b = nlohmann::json::parse(read_text_file(dir / "fitted.json"));
        cli_worst = 0.0;
        for (size_t i = 0; i < 4; ++i)
            cli_worst = std::max(cli_worst, std::abs(a.at("h0")[i].get<double>() -
                                                     b.at("h0")[i].get<double>()));
    }
    std::error_code ec;
    fs::remove_all(dir, ec);

    const double secs = seconds_since(t0);
    verdict(7, worst < 1e-8 && cli_ok && cli_worst < 1e-8 && secs < 1.0,
            fmt("fit err %.2e < 1e-8; design->analyze->fit err %.2e < 1e-8; %.2f s < 1 s", worst,
                cli_worst, secs));
}

// ---- criterion 8: training is bit-deterministic -----------------------------

void criterion8() {
    const fs::path dir =
        fs::temp_directory_path() / ("wavelat_acc_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    const std::string cd = "cd '" + dir.string() + "' && '" + std::string(WAVELAT_CLI_PATH) + "' ";
    const std::string args = "train --alpha 0.5 --images-per-class 8 --image-size 16 "
                             "--epochs 3 --seed 11 ";
    const bool ran = run_shell(cd + args + "--out a > /dev/null") == 0 &&
                     run_shell(cd + args + "--out b > /dev/null") == 0;
    bool identical = false;
    if (ran) {
        std::ifstream fa(dir / "a/metrics.csv", std::ios::binary);
        std::ifstream fb(dir / "b/metrics.csv", std::ios::binary);
        const std::string ca((std::istreambuf_iterator<char>(fa)),
                             std::istreambuf_iterator<char>());
        const std::string cb((std::istreambuf_iterator<char>(fb)),
                             std::istreambuf_iterator<char>());
        identical = !ca.empty() && ca == cb;
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    verdict(8, ran && identical,
            fmt("repeated train runs: %s", identical ? "metric histories bit-identical"
                                                     : "MISMATCH"));
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    if (g_failures == 0)
        std::printf("all 8 criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures;
}
