#include "namvp/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace namvp::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void io_error(const std::string& what) { throw Error(ErrorKind::IoError, what); }

void append_le(std::string& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>(bits & 0xffU));
    bits >>= 8;
  }
}

double read_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<double>(bits);
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) io_error("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const fs::path& file) {
  try {
    return json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ValidationError, file.string() + ": " + e.what());
  }
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::ValidationError, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ValidationError, std::string("field '") + key + "': " + e.what());
  }
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Matrix matrix_from_json(const json& j) {
  try {
    return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ValidationError, std::string("matrix: ") + e.what());
  }
}

void put_optional(json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}

}  // namespace

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) io_error("cannot write " + file.string());
  out << text;
  if (!out) io_error("short write to " + file.string());
}

void write_dataset(const EmbeddingDataset& ds, const fs::path& dir) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) io_error("cannot create " + dir.string() + ": " + ec.message());

  std::string blob;
  blob.reserve(ds.size() * (ds.dim + ds.patches * ds.dim) * 8);
  for (const auto& s : ds.samples) {
    for (double x : s.global) append_le(blob, x);
    for (double x : s.local.data()) append_le(blob, x);
  }
  write_text(dir / kBlobName, blob);

  json m;
  m["format_version"] = kDatasetFormatVersion;
  m["num_samples"] = ds.size();
  m["num_classes"] = ds.num_classes;
  m["dim"] = ds.dim;
  m["patches"] = ds.patches;
  m["feature_blob"] = kBlobName;
  m["labels"] = ds.labels;
  if (ds.truth) m["truth_labels"] = *ds.truth;
  m["provenance"] = ds.provenance;
  write_text(dir / kManifestName, m.dump(2) + "\n");
}

EmbeddingDataset read_dataset(const fs::path& dir) {
  const fs::path manifest = dir / kManifestName;
  if (!fs::exists(manifest)) io_error("missing manifest " + manifest.string());
  const json m = parse_json_file(manifest);
  const int version = required<int>(m, "format_version");
  if (version != kDatasetFormatVersion) {
    throw Error(ErrorKind::UnsupportedVersion, "dataset format version " + std::to_string(version));
  }

  EmbeddingDataset ds;
  const auto n = required<std::size_t>(m, "num_samples");
  ds.num_classes = required<std::size_t>(m, "num_classes");
  ds.dim = required<std::size_t>(m, "dim");
  ds.patches = required<std::size_t>(m, "patches");
  ds.labels = required<Labels>(m, "labels");
  if (m.contains("truth_labels") && !m.at("truth_labels").is_null()) ds.truth = required<Labels>(m, "truth_labels");
  if (m.contains("provenance")) ds.provenance = required<std::string>(m, "provenance");
  const auto blob_name = required<std::string>(m, "feature_blob");
  if (fs::path(blob_name).is_absolute()) throw Error(ErrorKind::ValidationError, "feature_blob must be a relative path");

  const fs::path blob_path = dir / blob_name;
  if (!fs::exists(blob_path)) io_error("missing feature blob " + blob_path.string());
  const std::string blob = read_file(blob_path);
  const std::size_t per_sample = ds.dim + ds.patches * ds.dim;
  if (blob.size() != n * per_sample * 8) {
    throw Error(ErrorKind::BlobLengthMismatch, "feature blob has " + std::to_string(blob.size()) + " bytes, expected " +
                                                   std::to_string(n * per_sample * 8));
  }

  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampleFeatures s;
    s.global.resize(ds.dim);
    for (double& x : s.global) {
      x = read_le(p);
      p += 8;
    }
    std::vector<double> local(ds.patches * ds.dim);
    for (double& x : local) {
      x = read_le(p);
      p += 8;
    }
    try {
      s.local = Matrix(ds.patches, ds.dim, std::move(local));
    } catch (const Error& e) {
      throw Error(ErrorKind::ValidationError, e.what());
    }
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

void write_bank(const PromptBank& bank, const fs::path& file) {
  json j;
  j["num_classes"] = bank.num_classes;
  j["views"] = bank.views;
  j["dim"] = bank.dim;
  j["log_tau"] = bank.log_tau;
  j["clean"] = json::array();
  j["noisy"] = json::array();
  for (const auto& g : bank.clean) j["clean"].push_back(matrix_to_json(g));
  for (const auto& g : bank.noisy) j["noisy"].push_back(matrix_to_json(g));
  write_text(file, j.dump() + "\n");
}

PromptBank read_bank(const fs::path& file) {
  const json j = parse_json_file(file);
  PromptBank bank;
  bank.num_classes = required<std::size_t>(j, "num_classes");
  bank.views = required<std::size_t>(j, "views");
  bank.dim = required<std::size_t>(j, "dim");
  bank.log_tau = required<double>(j, "log_tau");
  for (const auto& g : required<json>(j, "clean")) bank.clean.push_back(matrix_from_json(g));
  for (const auto& g : required<json>(j, "noisy")) bank.noisy.push_back(matrix_from_json(g));
  bank.validate();
  return bank;
}

std::string report_to_json(const RefinementReport& r) {
  json j;
  put_optional(j, "noise_ratio_before", r.noise_ratio_before);
  put_optional(j, "noise_ratio_after", r.noise_ratio_after);
  put_optional(j, "correct_correction_rate", r.correct_correction_rate);
  j["num_refined"] = r.num_refined;
  j["num_clean_kept"] = r.num_clean_kept;
  return j.dump();
}

std::string epoch_to_json(const EpochRecord& rec) {
  json j;
  j["epoch"] = rec.epoch;
  j["phase"] = rec.denoising ? "denoising" : "supervised";
  j["loss_total"] = rec.loss_total;
  j["loss_gce"] = rec.loss_gce;
  j["loss_itbp"] = rec.loss_itbp;
  j["tau"] = rec.tau;
  put_optional(j, "noise_ratio", rec.noise_ratio);
  if (rec.clean_count) j["clean_count"] = *rec.clean_count;
  if (rec.noisy_count) j["noisy_count"] = *rec.noisy_count;
  if (rec.report) j["report"] = json::parse(report_to_json(*rec.report));
  j["solver_converged"] = rec.solver_converged;
  return j.dump();
}

void write_history(const TrainHistory& h, const fs::path& file) {
  std::string text;
  for (const auto& rec : h.epochs) text += epoch_to_json(rec) + "\n";
  write_text(file, text);
}

void write_denoised(const DenoisedDataset& d, const fs::path& file) {
  json j;
  j["labels"] = d.labels;
  j["refined_mask"] = d.refined_mask;
  write_text(file, j.dump() + "\n");
}

Matrix parse_csv_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::ValidationError, "line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  try {
    return Matrix::from_rows(rows);
  } catch (const Error& e) {
    throw Error(ErrorKind::ValidationError, e.what());
  }
}

Matrix read_csv_matrix(const fs::path& file) {
  std::ifstream in(file);
  if (!in) io_error("cannot open " + file.string());
  return parse_csv_matrix(in);
}

void write_csv_matrix(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_real(m(r, c));
    }
    out << '\n';
  }
}

void apply_train_config_file(TrainConfig& cfg, const fs::path& file) {
  const json j = parse_json_file(file);
  auto set = [&](const char* key, auto& field) {
    if (j.contains(key)) field = required<std::decay_t<decltype(field)>>(j, key);
  };
  set("epochs", cfg.epochs);
  set("sup_epochs", cfg.sup_epochs);
  set("learning_rate", cfg.sgd.learning_rate);
  set("momentum", cfg.sgd.momentum);
  set("weight_decay", cfg.sgd.weight_decay);
  set("batch_size", cfg.batch_size);
  set("views", cfg.views);
  set("lambda_i", cfg.lambda_i);
  set("q", cfg.q);
  set("epsilon", cfg.alignment.epsilon);
  set("theta", cfg.alignment.theta);
  set("max_iter", cfg.alignment.max_iter);
  set("stop_delta", cfg.alignment.stop_delta);
  set("refine_epsilon", cfg.refine_epsilon);
  set("refine_per_batch", cfg.refine_per_batch);
  set("seed", cfg.seed);
}

}  // namespace namvp::io
