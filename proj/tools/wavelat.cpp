// Command-line front end: filter bank design and analysis, 2-D transforms,
// and the toy texture-classification training harness.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wavelat/dwt2d.hpp"
#include "wavelat/errors.hpp"
#include "wavelat/io.hpp"
#include "wavelat/lattice.hpp"
#include "wavelat/spectral.hpp"
#include "wavelat/train.hpp"
#include "wavelat/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::string cleaned = text;
    std::erase_if(cleaned, [](unsigned char c) { return std::isspace(c); });
    if (cleaned.empty()) return out;
    std::stringstream ss(cleaned);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) throw wavelat::ConfigError("empty entry in list '" + text + "'");
        try {
            size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw wavelat::ConfigError("cannot parse number '" + tok + "'");
        }
    }
    return out;
}

// Accepts either a bank file path or a built-in wavelet name.
wavelat::BankRecord resolve_bank(const std::string& arg) {
    if (fs::exists(arg)) return wavelat::load_bank(arg);
    if (wavelat::is_named_wavelet(arg)) {
        wavelat::BankRecord rec;
        rec.angles = wavelat::angles_for_wavelet(arg);
        rec.bank = wavelat::lattice_to_filters(rec.angles);
        return rec;
    }
    throw wavelat::DataError("'" + arg + "' is neither a bank file nor a built-in wavelet");
}

std::string format_alpha(double a) {
    std::ostringstream ss;
    ss << a;
    return ss.str();
}

// The transform core only accepts even sizes; odd images get their last row
// and column replicated, and reconstructions are cropped back.
wavelat::Mat pad_to_even(const wavelat::Mat& img) {
    const int rows = img.rows + img.rows % 2;
    const int cols = img.cols + img.cols % 2;
    if (rows == img.rows && cols == img.cols) return img;
    wavelat::Mat out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            out(r, c) = img(std::min(r, img.rows - 1), std::min(c, img.cols - 1));
    return out;
}

void write_unit_responses(const fs::path& dir, const wavelat::TrainResult& result, int points) {
    const auto units = result.net.unit_angles();
    for (size_t i = 0; i < units.size(); ++i) {
        std::vector<double> a(units[i]->value.begin(), units[i]->value.end());
        const wavelat::FilterBank bank =
            wavelat::lattice_to_filters(wavelat::LatticeAngles(std::move(a)));
        wavelat::write_response_csv(dir / ("unit" + std::to_string(i) + "_response.csv"), bank,
                                    points);
    }
}

json result_summary(const wavelat::TrainResult& result) {
    json j;
    const wavelat::EpochMetrics& last = result.history.back();
    j["alpha"] = result.config.alpha;
    j["epochs"] = last.epoch;
    j["l_ce"] = last.l_ce;
    j["l_sbe"] = last.l_sbe;
    j["l_total"] = last.l_total;
    j["train_acc"] = last.train_acc;
    j["test_acc"] = last.test_acc;
    j["unit_sbe"] = result.unit_sbe;
    return j;
}

void save_train_outputs(const fs::path& dir, wavelat::TrainResult& result) {
    wavelat::write_metrics_csv(dir / "metrics.csv", result.history);
    wavelat::save_checkpoint(dir / "checkpoint", result.net, result.config, result.history);
    wavelat::write_text_file(dir / "summary.json", result_summary(result).dump(2) + "\n");
    if (result.net.has_units()) write_unit_responses(dir, result, result.config.grid.intervals);
}

struct TrainFlags {
    wavelat::TrainConfig cfg;
    std::string stopband_edge = "0.6pi";
    std::uint64_t data_seed = 0;
    bool data_seed_set = false;

    void add_common(CLI::App* sub) {
        sub->add_option("--alpha", cfg.alpha, "Stopband loss weight in [0, 1]");
        sub->add_option("--wavelet", cfg.wavelet, "Initial bank: haar, db2, db3 or db4");
        sub->add_option("--arch", cfg.arch, "Architecture: wavelet or average");
        sub->add_option("--seed", cfg.seed, "Training seed (also the data seed unless --data-seed)");
        sub->add_option("--data-seed", data_seed, "Dataset seed override")
            ->each([this](const std::string&) { data_seed_set = true; });
        sub->add_option("--epochs", cfg.epochs, "Training epochs");
        sub->add_option("--lr", cfg.lr, "SGD learning rate");
        sub->add_option("--momentum", cfg.momentum, "SGD momentum");
        sub->add_option("--batch", cfg.batch_size, "Batch size");
        sub->add_option("--images-per-class", cfg.data.images_per_class, "Dataset size per class");
        sub->add_option("--image-size", cfg.data.image_size, "Square image size");
        sub->add_option("--noise", cfg.data.noise_std, "Additive noise sigma");
        sub->add_option("--K,--intervals", cfg.grid.intervals, "Frequency grid intervals K");
        sub->add_option("--ws,--stopband-edge", stopband_edge,
                        "Stopband edge (radians or e.g. 0.6pi)");
    }

    void finalize() {
        cfg.grid.stopband_edge = wavelat::parse_frequency(stopband_edge);
        cfg.data.seed = data_seed_set ? data_seed : cfg.seed;
        cfg.validate();
    }

    json to_json() const { return wavelat::train_config_to_json(cfg); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orthogonal FIR filter banks with a differentiable stopband objective"};
    app.set_version_flag("--version", wavelat::kVersion);
    app.require_subcommand(1);

    try {
        // ---- design -------------------------------------------------------
        auto* design = app.add_subcommand("design", "Create a filter bank from a name or angles");
        std::string design_wavelet, design_angles;
        std::string design_out = "bank.json";
        design->add_option("--wavelet", design_wavelet, "Built-in wavelet name");
        design->add_option("--angles", design_angles, "Comma-separated rotation angles (radians)");
        design->add_option("--out", design_out, "Output bank path");
        design->callback([&] {
            if (design_wavelet.empty() == design_angles.empty())
                throw wavelat::ConfigError("design: give exactly one of --wavelet or --angles");
            wavelat::LatticeAngles angles =
                design_wavelet.empty()
                    ? wavelat::LatticeAngles(parse_double_list(design_angles))
                    : wavelat::angles_for_wavelet(design_wavelet);
            const wavelat::FilterBank bank = wavelat::lattice_to_filters(angles);
            wavelat::check_bank_invariants(bank);
            wavelat::save_bank(design_out, angles, bank);
            json cfg = {{"wavelet", design_wavelet}, {"angles", design_angles}, {"out", design_out}};
            wavelat::write_run_record(wavelat::run_record_path(design_out, false), "design", cfg);
            std::cout << "wrote " << design_out << " (" << bank.taps() << " taps)\n";
        });

        // ---- fit ----------------------------------------------------------
        auto* fit = app.add_subcommand("fit", "Recover lattice angles for target coefficients");
        std::string fit_in, fit_coeffs;
        std::string fit_out = "fitted.json";
        int fit_restarts = 32;
        fit->add_option("--in", fit_in, "Bank file, or JSON object with an h0 array");
        fit->add_option("--coeffs", fit_coeffs, "Comma-separated target h0 coefficients");
        fit->add_option("--restarts", fit_restarts, "Random restarts");
        fit->add_option("--out", fit_out, "Output bank path");
        fit->callback([&] {
            if (fit_in.empty() == fit_coeffs.empty())
                throw wavelat::ConfigError("fit: give exactly one of --in or --coeffs");
            std::vector<double> target;
            if (!fit_coeffs.empty()) {
                target = parse_double_list(fit_coeffs);
            } else {
                json j;
                try {
                    j = json::parse(wavelat::read_text_file(fit_in));
                    target = j.at("h0").get<std::vector<double>>();
                } catch (const json::exception& e) {
                    throw wavelat::DataError("fit: cannot read h0 from '" + fit_in + "': " + e.what());
                }
            }
            const wavelat::FitResult res = wavelat::fit_angles(target, fit_restarts);
            const wavelat::FilterBank bank = wavelat::lattice_to_filters(res.angles);
            wavelat::save_bank(fit_out, res.angles, bank);
            json cfg = {{"in", fit_in}, {"coeffs", fit_coeffs}, {"restarts", fit_restarts},
                        {"out", fit_out}};
            wavelat::write_run_record(wavelat::run_record_path(fit_out, false), "fit", cfg);
            std::cout << "fit residual " << res.residual << " after " << res.restarts_used
                      << " starts; wrote " << fit_out << "\n";
        });

        // ---- analyze ------------------------------------------------------
        auto* analyze = app.add_subcommand("analyze", "Frequency response and stopband summary");
        std::string an_bank, an_edge = "0.6pi";
        std::string an_out = "response.csv", an_summary;
        int an_intervals = 500;
        analyze->add_option("--bank", an_bank, "Bank file or built-in wavelet name")->required();
        analyze->add_option("--K,--intervals", an_intervals, "Frequency grid intervals K");
        analyze->add_option("--ws,--stopband-edge", an_edge,
                            "Stopband edge (radians or e.g. 0.6pi)");
        analyze->add_option("--out", an_out, "Response CSV path");
        analyze->add_option("--summary", an_summary, "Summary JSON path (default: next to CSV)");
        analyze->callback([&] {
            const wavelat::BankRecord rec = resolve_bank(an_bank);
            wavelat::SpectralGrid grid{an_intervals, wavelat::parse_frequency(an_edge)};
            grid.validate();
            wavelat::write_response_csv(an_out, rec.bank, grid.intervals);
            double e_total = 0.0;
            for (double x : rec.bank.h0) e_total += x * x;
            json summary;
            summary["K"] = grid.intervals;
            summary["w_s"] = grid.stopband_edge;
            summary["E_sbn"] = wavelat::stopband_energy_numeric(rec.bank.h0, grid);
            summary["E_total"] = e_total;
            summary["L_SBE"] = wavelat::sbe_loss(rec.bank.h0, grid);
            fs::path summary_path = an_summary.empty()
                ? wavelat::run_record_path(an_out, false).parent_path() /
                      (fs::path(an_out).stem().string() + ".summary.json")
                : fs::path(an_summary);
            wavelat::write_text_file(summary_path, summary.dump(2) + "\n");
            json cfg = {{"bank", an_bank}, {"intervals", an_intervals}, {"stopband_edge", an_edge},
                        {"out", an_out}, {"summary", summary_path.string()}};
            wavelat::write_run_record(wavelat::run_record_path(an_out, false), "analyze", cfg);
            std::cout << summary.dump(2) << "\n";
        });

        // ---- dwt ----------------------------------------------------------
        auto* dwt = app.add_subcommand("dwt", "One-level 2-D transform of an image");
        std::string dwt_bank, dwt_in, dwt_prefix = "subband";
        bool dwt_viz = false, dwt_check = false;
        dwt->add_option("--bank", dwt_bank, "Bank file or built-in wavelet name")->required();
        dwt->add_option("--in", dwt_in, "Input image (.pgm) or tensor (.lwt)")->required();
        dwt->add_option("--out-prefix", dwt_prefix, "Output prefix for <prefix>_<band>.lwt");
        dwt->add_flag("--viz", dwt_viz, "Also write min-max scaled PGM previews");
        dwt->add_flag("--check", dwt_check, "Verify perfect reconstruction and print the error");
        dwt->callback([&] {
            const wavelat::BankRecord rec = resolve_bank(dwt_bank);
            wavelat::Mat img;
            const std::string ext = fs::path(dwt_in).extension().string();
            if (ext == ".pgm") {
                img = wavelat::read_pgm(dwt_in);
            } else if (ext == ".lwt") {
                const wavelat::Tensor3<float> t = wavelat::read_lwt(dwt_in);
                if (t.channels != 1)
                    throw wavelat::DataError("dwt: expected a single-channel tensor");
                img = wavelat::tensor_plane_to_mat(t, 0);
            } else {
                throw wavelat::ConfigError("dwt: input must end in .pgm or .lwt");
            }
            const wavelat::Mat padded = pad_to_even(img);
            const wavelat::SubbandSet bands = wavelat::dwt2(rec.bank, padded);
            const std::pair<const char*, const wavelat::Mat*> named[] = {
                {"ll", &bands.ll}, {"lh", &bands.lh}, {"hl", &bands.hl}, {"hh", &bands.hh}};
            for (const auto& [name, mat] : named) {
                const fs::path out = dwt_prefix + std::string("_") + name + ".lwt";
                wavelat::write_lwt(out, wavelat::mat_to_tensor(*mat));
                if (dwt_viz) {
                    double lo = mat->a[0], hi = mat->a[0];
                    for (double v : mat->a) {
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                    wavelat::Mat scaled(mat->rows, mat->cols);
                    const double span = hi > lo ? hi - lo : 1.0;
                    for (size_t i = 0; i < mat->a.size(); ++i)
                        scaled.a[i] = 255.0 * (mat->a[i] - lo) / span;
                    wavelat::write_pgm(dwt_prefix + std::string("_") + name + ".pgm", scaled);
                }
            }
            if (dwt_check) {
                wavelat::Mat back = wavelat::idwt2(rec.bank, bands);
                if (back.rows != img.rows || back.cols != img.cols) {
                    wavelat::Mat cropped(img.rows, img.cols);
                    for (int r = 0; r < img.rows; ++r)
                        for (int c = 0; c < img.cols; ++c) cropped(r, c) = back(r, c);
                    back = std::move(cropped);
                }
                std::cout << "reconstruction max error " << wavelat::max_abs_diff(img, back)
                          << "\n";
            }
            json cfg = {{"bank", dwt_bank}, {"in", dwt_in}, {"out_prefix", dwt_prefix},
                        {"viz", dwt_viz}, {"check", dwt_check}};
            wavelat::write_run_record(dwt_prefix + std::string(".run.json"), "dwt", cfg);
            std::cout << "wrote " << dwt_prefix << "_{ll,lh,hl,hh}.lwt ("
                      << bands.ll.rows << "x" << bands.ll.cols << " each)\n";
        });

        // ---- train --------------------------------------------------------
        auto* train = app.add_subcommand("train", "Train the toy texture classifier");
        TrainFlags tf;
        std::string train_out = "train_out";
        tf.add_common(train);
        train->add_option("--out", train_out, "Output directory");
        train->callback([&] {
            tf.finalize();
            wavelat::TrainResult result = wavelat::train_model(tf.cfg);
            fs::create_directories(train_out);
            save_train_outputs(train_out, result);
            wavelat::write_run_record(wavelat::run_record_path(train_out, true), "train",
                                      tf.to_json());
            const wavelat::EpochMetrics& last = result.history.back();
            std::cout << "final train_acc " << last.train_acc << " test_acc " << last.test_acc
                      << " l_total " << last.l_total << "\n";
        });

        // ---- sweep --------------------------------------------------------
        auto* sweep = app.add_subcommand("sweep", "Retrain across stopband weights");
        TrainFlags sf;
        std::string sweep_alphas = "0,0.1,0.25,0.5,0.75,0.9";
        std::string sweep_out = "sweep_out";
        sf.add_common(sweep);
        sweep->add_option("--alphas", sweep_alphas, "Comma-separated alpha values");
        sweep->add_option("--out", sweep_out, "Output directory");
        sweep->callback([&] {
            sf.finalize();
            const std::vector<double> alphas = parse_double_list(sweep_alphas);
            std::vector<wavelat::TrainResult> results = wavelat::alpha_sweep(sf.cfg, alphas);
            fs::create_directories(sweep_out);
            json report = json::array();
            for (wavelat::TrainResult& result : results) {
                const fs::path sub = fs::path(sweep_out) /
                                     ("alpha_" + format_alpha(result.config.alpha));
                fs::create_directories(sub);
                save_train_outputs(sub, result);
                report.push_back(result_summary(result));
            }
            wavelat::write_text_file(fs::path(sweep_out) / "report.json", report.dump(2) + "\n");
            json cfg = sf.to_json();
            cfg["alphas"] = alphas;
            wavelat::write_run_record(wavelat::run_record_path(sweep_out, true), "sweep", cfg);
            std::cout << "swept " << results.size() << " alpha value(s); report at " << sweep_out
                      << "/report.json\n";
        });

        // ---- eval ---------------------------------------------------------
        auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on its test split");
        std::string eval_model, eval_out = "eval.json";
        eval->add_option("--model", eval_model, "Directory written by train (or its checkpoint)")
            ->required();
        eval->add_option("--out", eval_out, "Report JSON path");
        eval->callback([&] {
            fs::path model_dir = eval_model;
            if (fs::exists(model_dir / "checkpoint" / "manifest.json"))
                model_dir = model_dir / "checkpoint";
            const wavelat::Checkpoint cp = wavelat::load_checkpoint(model_dir);
            const wavelat::TextureDataset data = wavelat::make_texture_dataset(cp.config.data);
            const wavelat::EvalReport report = wavelat::evaluate(cp.net, data, data.test_indices);
            json j;
            j["samples"] = report.samples;
            j["accuracy"] = report.accuracy;
            j["per_class"] = report.per_class;
            j["confusion"] = report.confusion;
            wavelat::write_text_file(eval_out, j.dump(2) + "\n");
            json cfg = {{"model", eval_model}, {"out", eval_out}};
            wavelat::write_run_record(wavelat::run_record_path(eval_out, false), "eval", cfg);
            std::cout << j.dump(2) << "\n";
        });

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int rc = app.exit(e);
            return rc == 0 ? 0 : 2;
        }
        return 0;
    } catch (const wavelat::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const wavelat::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const wavelat::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
