#include "wavelat/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "wavelat/errors.hpp"
#include "wavelat/version.hpp"

namespace wavelat {
namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, mode);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    return out;
}

// Reads one whitespace-delimited PGM token, skipping '#' comment lines.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    while (ch != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    return tok;
}

int pgm_int(std::istream& in, const char* what) {
    const std::string tok = pgm_token(in);
    int value = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw DataError(std::string("pgm: malformed ") + what);
    return value;
}

void put_u32le(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff),
                                static_cast<unsigned char>((v >> 16) & 0xff),
                                static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw DataError(std::string("lwt: truncated ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string param_file_name(std::string name) {
    for (char& c : name)
        if (c == '.') c = '_';
    return name + ".lwt";
}

}  // namespace

Mat read_pgm(const fs::path& path) {
    std::ifstream in = open_input(path, std::ios::binary);
    if (pgm_token(in) != "P5") throw DataError("pgm: expected binary P5 magic");
    const int width = pgm_int(in, "width");
    const int height = pgm_int(in, "height");
    const int maxval = pgm_int(in, "maxval");
    if (width < 1 || height < 1) throw DataError("pgm: non-positive dimensions");
    if (maxval < 1 || maxval > 255) throw DataError("pgm: only 8-bit images are supported");
    // The header ends with exactly one whitespace byte, already consumed by
    // the token reader.
    Mat img(height, width);
    std::vector<unsigned char> row(static_cast<size_t>(width));
    for (int r = 0; r < height; ++r) {
        if (!in.read(reinterpret_cast<char*>(row.data()), width))
            throw DataError("pgm: truncated pixel data");
        for (int c = 0; c < width; ++c) img(r, c) = static_cast<double>(row[c]);
    }
    return img;
}

void write_pgm(const fs::path& path, const Mat& image) {
    if (image.rows < 1 || image.cols < 1) throw DimensionError("pgm: empty image");
    std::ofstream out = open_output(path, std::ios::binary);
    out << "P5\n" << image.cols << " " << image.rows << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(image.cols));
    for (int r = 0; r < image.rows; ++r) {
        for (int c = 0; c < image.cols; ++c) {
            const double v = std::lround(image(r, c));
            row[c] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), image.cols);
    }
    if (!out) throw DataError("pgm: write failed for '" + path.string() + "'");
}

Tensor3<float> read_lwt(const fs::path& path) {
    std::ifstream in = open_input(path, std::ios::binary);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "LWT1", 4) != 0)
        throw DataError("lwt: bad magic in '" + path.string() + "'");
    const std::uint32_t rows = get_u32le(in, "rows");
    const std::uint32_t cols = get_u32le(in, "cols");
    const std::uint32_t channels = get_u32le(in, "channels");
    if (rows == 0 || cols == 0 || channels == 0) throw DataError("lwt: zero dimension");
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols * channels;
    if (count > (1ull << 31)) throw DataError("lwt: implausibly large tensor");
    Tensor3<float> t(static_cast<int>(channels), static_cast<int>(rows), static_cast<int>(cols));
    std::vector<unsigned char> raw(static_cast<size_t>(count) * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw DataError("lwt: truncated tensor data");
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                             (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                             (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                             (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        t.v[i] = f;
    }
    return t;
}

void write_lwt(const fs::path& path, const Tensor3<float>& t) {
    if (t.channels < 1 || t.rows < 1 || t.cols < 1) throw DimensionError("lwt: empty tensor");
    std::ofstream out = open_output(path, std::ios::binary);
    out.write("LWT1", 4);
    put_u32le(out, static_cast<std::uint32_t>(t.rows));
    put_u32le(out, static_cast<std::uint32_t>(t.cols));
    put_u32le(out, static_cast<std::uint32_t>(t.channels));
    std::vector<unsigned char> raw(t.v.size() * 4);
    for (size_t i = 0; i < t.v.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &t.v[i], 4);
        raw[4 * i] = static_cast<unsigned char>(bits & 0xff);
        raw[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
        raw[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
        raw[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("lwt: write failed for '" + path.string() + "'");
}

Mat tensor_plane_to_mat(const Tensor3<float>& t, int channel) {
    if (channel < 0 || channel >= t.channels) throw DimensionError("tensor: channel out of range");
    Mat m(t.rows, t.cols);
    const float* p = t.plane(channel);
    for (size_t i = 0; i < t.plane_size(); ++i) m.a[i] = static_cast<double>(p[i]);
    return m;
}

Tensor3<float> mat_to_tensor(const Mat& m) {
    Tensor3<float> t(1, m.rows, m.cols);
    for (size_t i = 0; i < m.a.size(); ++i) t.v[i] = static_cast<float>(m.a[i]);
    return t;
}

BankRecord load_bank(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bank '" + path.string() + "': " + e.what());
    }
    return bank_from_json(j);
}

void save_bank(const fs::path& path, const LatticeAngles& angles, const FilterBank& bank) {
    write_text_file(path, bank_to_json(angles, bank).dump(2) + "\n");
}

void write_metrics_csv(const fs::path& path, std::span<const EpochMetrics> history) {
    std::ostringstream out;
    out << "epoch,l_ce,l_sbe,l_total,train_acc,test_acc\n";
    out.precision(17);
    for (const EpochMetrics& m : history)
        out << m.epoch << "," << m.l_ce << "," << m.l_sbe << "," << m.l_total << ","
            << m.train_acc << "," << m.test_acc << "\n";
    write_text_file(path, out.str());
}

void write_response_csv(const fs::path& path, const FilterBank& bank, int points) {
    if (points < 1) throw ConfigError("response csv: points must be positive");
    std::ostringstream out;
    out << "w,mag_sq_h0,mag_sq_h1\n";
    out.precision(17);
    for (int i = 0; i <= points; ++i) {
        const double w = i * std::numbers::pi / points;
        out << w << "," << magnitude_response_sq(bank.h0, w) << ","
            << magnitude_response_sq(bank.h1, w) << "\n";
    }
    write_text_file(path, out.str());
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["arch"] = cfg.arch;
    j["wavelet"] = cfg.wavelet;
    j["alpha"] = cfg.alpha;
    j["lr"] = cfg.lr;
    j["momentum"] = cfg.momentum;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["seed"] = cfg.seed;
    j["grid"] = {{"intervals", cfg.grid.intervals}, {"stopband_edge", cfg.grid.stopband_edge}};
    j["data"] = {{"images_per_class", cfg.data.images_per_class},
                 {"image_size", cfg.data.image_size},
                 {"seed", cfg.data.seed},
                 {"train_fraction", cfg.data.train_fraction},
                 {"noise_std", cfg.data.noise_std}};
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    try {
        cfg.arch = j.at("arch").get<std::string>();
        cfg.wavelet = j.at("wavelet").get<std::string>();
        cfg.alpha = j.at("alpha").get<double>();
        cfg.lr = j.at("lr").get<double>();
        cfg.momentum = j.at("momentum").get<double>();
        cfg.epochs = j.at("epochs").get<int>();
        cfg.batch_size = j.at("batch_size").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.grid.intervals = j.at("grid").at("intervals").get<int>();
        cfg.grid.stopband_edge = j.at("grid").at("stopband_edge").get<double>();
        cfg.data.images_per_class = j.at("data").at("images_per_class").get<int>();
        cfg.data.image_size = j.at("data").at("image_size").get<int>();
        cfg.data.seed = j.at("data").at("seed").get<std::uint64_t>();
        cfg.data.train_fraction = j.at("data").at("train_fraction").get<double>();
        cfg.data.noise_std = j.at("data").at("noise_std").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("train config json: ") + e.what());
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw DataError(std::string("train config json: ") + e.what());
    }
    return cfg;
}

void save_checkpoint(const fs::path& dir, ToyNet<float>& net, const TrainConfig& cfg,
                     std::span<const EpochMetrics> history) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    nlohmann::json manifest;
    manifest["format"] = "wavelat-checkpoint";
    manifest["version"] = kVersion;
    manifest["config"] = train_config_to_json(cfg);
    manifest["classes"] = ToyNet<float>::kClasses;

    nlohmann::json params = nlohmann::json::array();
    for (const ParamRef<float>& p : parameters(net)) {
        nlohmann::json entry;
        entry["name"] = p.name;
        entry["size"] = p.size;
        entry["file"] = param_file_name(p.name);
        params.push_back(entry);
        Tensor3<float> blob(1, 1, static_cast<int>(p.size));
        std::copy(p.value, p.value + p.size, blob.v.begin());
        write_lwt(dir / param_file_name(p.name), blob);
    }
    manifest["parameters"] = params;

    if (!history.empty()) {
        const EpochMetrics& last = history.back();
        manifest["metrics"] = {{"epochs", last.epoch},
                               {"l_ce", last.l_ce},
                               {"l_sbe", last.l_sbe},
                               {"l_total", last.l_total},
                               {"train_acc", last.train_acc},
                               {"test_acc", last.test_acc}};
    }
    if (net.has_units()) {
        nlohmann::json angles;
        const char* names[] = {"unit_pool", "unit_main", "unit_shortcut"};
        const auto units = net.unit_angles();
        for (size_t i = 0; i < units.size(); ++i) {
            std::vector<double> a(units[i]->value.begin(), units[i]->value.end());
            angles[names[i]] = a;
        }
        manifest["unit_angles"] = angles;
    }
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "wavelat-checkpoint")
        throw DataError("checkpoint manifest: unrecognized format field");

    Checkpoint cp;
    cp.manifest = manifest;
    cp.config = train_config_from_json(manifest.at("config"));

    std::mt19937 rng(0);
    const auto pooling = cp.config.arch == "average" ? ToyNet<float>::Pooling::average
                                                     : ToyNet<float>::Pooling::wavelet;
    cp.net = make_toynet<float>(pooling, angles_for_wavelet(cp.config.wavelet), rng);

    std::vector<ParamRef<float>> params = parameters(cp.net);
    const nlohmann::json& listed = manifest.at("parameters");
    if (!listed.is_array() || listed.size() != params.size())
        throw DataError("checkpoint: parameter list does not match the architecture");
    for (size_t i = 0; i < params.size(); ++i) {
        const nlohmann::json& entry = listed[i];
        if (entry.at("name").get<std::string>() != params[i].name)
            throw DataError("checkpoint: parameter order mismatch at '" + params[i].name + "'");
        const Tensor3<float> blob = read_lwt(dir / entry.at("file").get<std::string>());
        if (blob.v.size() != params[i].size)
            throw DataError("checkpoint: size mismatch for '" + params[i].name + "'");
        std::copy(blob.v.begin(), blob.v.end(), params[i].value);
    }
    return cp;
}

void write_run_record(const fs::path& path, std::string_view command,
                      const nlohmann::json& config) {
    nlohmann::json j;
    j["command"] = std::string(command);
    j["version"] = kVersion;
    j["timestamp"] = iso_timestamp();
    j["config"] = config;
    write_text_file(path, j.dump(2) + "\n");
}

std::filesystem::path run_record_path(const fs::path& primary_output, bool output_is_directory) {
    if (output_is_directory) return primary_output / "run.json";
    fs::path p = primary_output;
    p.replace_extension();
    p += ".run.json";
    return p;
}

double parse_frequency(std::string_view text) {
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
            s.end());
    if (s.empty()) throw ConfigError("frequency: empty value");
    double scale = 1.0;
    if (s.size() >= 2 && (s.ends_with("pi") || s.ends_with("PI"))) {
        scale = std::numbers::pi;
        s.resize(s.size() - 2);
        if (!s.empty() && s.back() == '*') s.pop_back();
        if (s.empty()) return scale;
    }
    double value = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("frequency: cannot parse '" + std::string(text) + "'");
    return value * scale;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in = open_input(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
    std::ofstream out = open_output(path, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace wavelat
