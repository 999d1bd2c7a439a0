#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "namvp/io.hpp"
#include "namvp/synth.hpp"
#include "support.hpp"

using namespace namvp;
using testing::kind_of;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() / ("namvp_io_" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void rewrite_manifest(const fs::path& dir, const std::function<void(nlohmann::json&)>& edit) {
  auto j = nlohmann::json::parse(slurp(dir / io::kManifestName));
  edit(j);
  io::write_text(dir / io::kManifestName, j.dump());
}

EmbeddingDataset small_dataset() {
  synth::SynthConfig cfg;
  cfg.num_classes = 3;
  cfg.shots = 2;
  cfg.dim = 4;
  cfg.patches = 3;
  cfg.noise_rate = 0.5;
  return synth::gen_dataset(cfg);
}

}  // namespace

TEST_CASE("dataset round trip examples") {
  TempDir tmp;
  const auto ds = small_dataset();
  io::write_dataset(ds, tmp.path / "d");
  CHECK(testing::bitwise_equal(io::read_dataset(tmp.path / "d"), ds));
  CHECK(fs::file_size(tmp.path / "d" / io::kBlobName) == ds.size() * (4 + 3 * 4) * 8);

  SUBCASE("truncated blob") {
    const std::string blob = slurp(tmp.path / "d" / io::kBlobName);
    io::write_text(tmp.path / "d" / io::kBlobName, blob.substr(0, blob.size() - 8));
    CHECK(kind_of([&] { io::read_dataset(tmp.path / "d"); }) == ErrorKind::BlobLengthMismatch);
  }
  SUBCASE("label out of range") {
    rewrite_manifest(tmp.path / "d", [](nlohmann::json& j) { j["labels"][0] = 3; });
    CHECK(kind_of([&] { io::read_dataset(tmp.path / "d"); }) == ErrorKind::ValidationError);
  }
  SUBCASE("missing blob") {
    fs::remove(tmp.path / "d" / io::kBlobName);
    CHECK(kind_of([&] { io::read_dataset(tmp.path / "d"); }) == ErrorKind::IoError);
  }
  SUBCASE("missing manifest") {
    CHECK(kind_of([&] { io::read_dataset(tmp.path / "nowhere"); }) == ErrorKind::IoError);
  }
  SUBCASE("unsupported version") {
    rewrite_manifest(tmp.path / "d", [](nlohmann::json& j) { j["format_version"] = 2; });
    CHECK(kind_of([&] { io::read_dataset(tmp.path / "d"); }) == ErrorKind::UnsupportedVersion);
  }
}

TEST_CASE("random datasets round trip bit for bit") {
  TempDir tmp;
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto ds = testing::random_dataset(rng);
    const fs::path dir = tmp.path / std::to_string(trial);
    io::write_dataset(ds, dir);
    CHECK(testing::bitwise_equal(io::read_dataset(dir), ds));
  }
}

TEST_CASE("prompt bank round trip") {
  TempDir tmp;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    PromptBank bank = PromptBank::random(3, 2, 5, rng, 1e-3 * (trial + 1));
    bank.log_tau = -1.2345678901234567 * trial;
    io::write_bank(bank, tmp.path / "bank.json");
    const PromptBank back = io::read_bank(tmp.path / "bank.json");
    CHECK(back == bank);
    for (std::size_t k = 0; k < 3; ++k) CHECK(testing::same_bits(back.clean[k].data(), bank.clean[k].data()));
  }
  io::write_text(tmp.path / "broken.json", "{\"num_classes\": 1");
  CHECK(kind_of([&] { io::read_bank(tmp.path / "broken.json"); }) == ErrorKind::ValidationError);
}

TEST_CASE("csv matrices") {
  std::istringstream in("# header\n1, 2.5,-3\n\n  # indented comment\n4,5e-1,6\n");
  const Matrix m = io::parse_csv_matrix(in);
  CHECK(m == Matrix::from_rows({{1, 2.5, -3}, {4, 0.5, 6}}));

  std::istringstream ragged("1,2\n3\n");
  CHECK(kind_of([&] { io::parse_csv_matrix(ragged); }) == ErrorKind::ValidationError);
  std::istringstream junk("1,abc\n");
  CHECK(kind_of([&] { io::parse_csv_matrix(junk); }) == ErrorKind::ValidationError);

  std::mt19937_64 rng(8);
  const Matrix r = testing::gaussian(4, 3, rng, 1e5);
  std::stringstream ss;
  io::write_csv_matrix(ss, r);
  const Matrix back = io::parse_csv_matrix(ss);
  CHECK(testing::same_bits(back.data(), r.data()));
  CHECK(io::format_real(0.1) == "0.10000000000000001");
}

TEST_CASE("reports and history serialize as flat records") {
  RefinementReport counts;
  counts.num_refined = 2;
  counts.num_clean_kept = 5;
  const auto j = nlohmann::json::parse(io::report_to_json(counts));
  CHECK_FALSE(j.contains("noise_ratio_before"));
  CHECK_FALSE(j.contains("correct_correction_rate"));
  CHECK(j["num_refined"] == 2);

  TrainHistory h;
  for (std::size_t e = 1; e <= 3; ++e) {
    EpochRecord rec;
    rec.epoch = e;
    rec.loss_total = 0.1 * static_cast<double>(e);
    rec.noise_ratio = 0.25;
    h.epochs.push_back(rec);
  }
  TempDir tmp;
  io::write_history(h, tmp.path / "history.jsonl");
  std::istringstream lines(slurp(tmp.path / "history.jsonl"));
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const auto rec = nlohmann::json::parse(line);
    ++count;
    CHECK(rec["epoch"] == count);
    CHECK(rec["loss_total"].get<double>() == 0.1 * static_cast<double>(count));
  }
  CHECK(count == 3);
}

TEST_CASE("train config file overrides fields") {
  TempDir tmp;
  io::write_text(tmp.path / "cfg.json", R"({"epochs": 7, "learning_rate": 0.01, "theta": 0.5, "refine_per_batch": true})");
  TrainConfig cfg;
  io::apply_train_config_file(cfg, tmp.path / "cfg.json");
  CHECK(cfg.epochs == 7);
  CHECK(cfg.sgd.learning_rate == 0.01);
  CHECK(cfg.alignment.theta == 0.5);
  CHECK(cfg.refine_per_batch);
  CHECK(cfg.sup_epochs == 20);
  io::write_text(tmp.path / "bad.json", R"({"epochs": "many"})");
  CHECK(kind_of([&] { io::apply_train_config_file(cfg, tmp.path / "bad.json"); }) == ErrorKind::ValidationError);
}
