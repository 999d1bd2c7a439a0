#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "namvp/alignment.hpp"
#include "namvp/dataset.hpp"
#include "namvp/refinement.hpp"
#include "namvp/trainer.hpp"

namespace namvp::io {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kBlobName = "features.bin";

/// Writes manifest.json plus a little-endian float64 blob laid out per
/// sample as [global (d)][local (L x d), row-major]. Creates `dir`.
void write_dataset(const EmbeddingDataset& ds, const std::filesystem::path& dir);

/// Inverse of write_dataset. IoError, BlobLengthMismatch, ValidationError,
/// UnsupportedVersion.
EmbeddingDataset read_dataset(const std::filesystem::path& dir);

void write_bank(const PromptBank& bank, const std::filesystem::path& file);
PromptBank read_bank(const std::filesystem::path& file);

/// Flat key/value JSON object; ratio fields are omitted when absent.
std::string report_to_json(const RefinementReport& r);
std::string epoch_to_json(const EpochRecord& rec);
/// One JSON object per line.
void write_history(const TrainHistory& h, const std::filesystem::path& file);

void write_denoised(const DenoisedDataset& d, const std::filesystem::path& file);

/// Comma-separated rows; '#' lines and blank lines are skipped.
Matrix read_csv_matrix(const std::filesystem::path& file);
Matrix parse_csv_matrix(std::istream& in);
/// 17 significant digits per entry.
void write_csv_matrix(std::ostream& out, const Matrix& m);

/// Overrides fields of `cfg` present in a JSON config file.
void apply_train_config_file(TrainConfig& cfg, const std::filesystem::path& file);

/// %.17g rendering.
std::string format_real(double x);

void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace namvp::io
