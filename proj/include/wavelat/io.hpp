#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wavelat/mat.hpp"
#include "wavelat/tensor.hpp"
#include "wavelat/train.hpp"

namespace wavelat {

// ---- images ----------------------------------------------------------------

// Binary 8-bit PGM (P5, maxval <= 255). Pixels are used as raw 0..255
// values; no rescaling or gamma. Throws DataError on malformed input.
Mat read_pgm(const std::filesystem::path& path);

// Rounds to the nearest integer and clamps to 0..255.
void write_pgm(const std::filesystem::path& path, const Mat& image);

// ---- raw tensors -----------------------------------------------------------

// LWT1 container: 16-byte header (magic "LWT1", then rows, cols, channels as
// little-endian uint32) followed by channel-major float32 little-endian data.
Tensor3<float> read_lwt(const std::filesystem::path& path);
void write_lwt(const std::filesystem::path& path, const Tensor3<float>& t);

Mat tensor_plane_to_mat(const Tensor3<float>& t, int channel);
Tensor3<float> mat_to_tensor(const Mat& m);

// ---- filter banks ----------------------------------------------------------

BankRecord load_bank(const std::filesystem::path& path);
void save_bank(const std::filesystem::path& path, const LatticeAngles& angles,
               const FilterBank& bank);

// ---- training artifacts ----------------------------------------------------

// Header: epoch,l_ce,l_sbe,l_total,train_acc,test_acc
void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> history);

// Header: w,mag_sq_h0,mag_sq_h1; rows at w = i*pi/points for i = 0..points.
void write_response_csv(const std::filesystem::path& path, const FilterBank& bank, int points);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);  // throws DataError

// Checkpoint directory: manifest.json plus one LWT1 blob per parameter.
// Loading rebuilds the network and restores every parameter bit-for-bit.
void save_checkpoint(const std::filesystem::path& dir, ToyNet<float>& net, const TrainConfig& cfg,
                     std::span<const EpochMetrics> history);

struct Checkpoint {
    ToyNet<float> net;
    TrainConfig config;
    nlohmann::json manifest;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// ---- provenance ------------------------------------------------------------

// {"command", "version", "timestamp", "config"}. The timestamp is the only
// field that varies between identical runs.
void write_run_record(const std::filesystem::path& path, std::string_view command,
                      const nlohmann::json& config);

// For a file output "x/y.ext" the record goes to "x/y.run.json"; for a
// directory output it goes to "<dir>/run.json".
std::filesystem::path run_record_path(const std::filesystem::path& primary_output,
                                      bool output_is_directory);

// ---- misc ------------------------------------------------------------------

// Accepts plain radians ("1.884") or multiples of pi ("0.6pi", "0.6*pi").
double parse_frequency(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace wavelat
