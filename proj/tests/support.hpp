#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "namvp/dataset.hpp"
#include "namvp/error.hpp"
#include "namvp/tensor.hpp"

namespace testing {

inline namvp::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const namvp::Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected an Error");
}

inline namvp::Matrix gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  namvp::Matrix m(r, c);
  for (double& x : m.data()) x = normal(rng);
  return m;
}

/// Unit basis vector e_i of length d.
inline namvp::Vector basis(std::size_t d, std::size_t i) {
  namvp::Vector v(d, 0.0);
  v[i] = 1.0;
  return v;
}

/// Matrix with every one of `rows` rows equal to v.
inline namvp::Matrix repeat_row(const namvp::Vector& v, std::size_t rows) {
  namvp::Matrix m(rows, v.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < v.size(); ++c) m(r, c) = v[c];
  return m;
}

/// Random dataset with awkward but valid doubles: wide exponents and signed
/// zeros off the leading coordinate, which keeps every row normalizable.
inline namvp::EmbeddingDataset random_dataset(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> small(1, 6);
  std::uniform_real_distribution<double> exponent(-30.0, 30.0);
  std::normal_distribution<double> normal;
  namvp::EmbeddingDataset ds;
  ds.num_classes = small(rng);
  ds.dim = small(rng);
  ds.patches = small(rng);
  const std::size_t n = small(rng) - 1;
  auto value = [&](bool leading) {
    if (leading) return (rng() % 2 ? -1.0 : 1.0) * (0.5 + std::abs(normal(rng)));
    const double x = normal(rng) * std::pow(2.0, exponent(rng));
    return rng() % 17 == 0 ? -0.0 : x;
  };
  std::uniform_int_distribution<std::size_t> label(0, ds.num_classes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    namvp::SampleFeatures s{namvp::Vector(ds.dim), namvp::Matrix(ds.patches, ds.dim)};
    for (std::size_t c = 0; c < ds.dim; ++c) s.global[c] = value(c == 0);
    for (std::size_t l = 0; l < ds.patches; ++l)
      for (std::size_t c = 0; c < ds.dim; ++c) s.local(l, c) = value(c == 0);
    ds.samples.push_back(std::move(s));
    ds.labels.push_back(label(rng));
  }
  if (rng() % 2 == 0) {
    namvp::Labels truth;
    for (std::size_t i = 0; i < n; ++i) truth.push_back(label(rng));
    ds.truth = truth;
  }
  ds.provenance = "seed " + std::to_string(rng() % 1000) + " \"quoted\" caf\u00e9";
  return ds;
}

inline bool same_bits(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

/// Field-by-field equality with features compared bit for bit.
inline bool bitwise_equal(const namvp::EmbeddingDataset& a, const namvp::EmbeddingDataset& b) {
  if (a.num_classes != b.num_classes || a.dim != b.dim || a.patches != b.patches || a.size() != b.size() ||
      a.labels != b.labels || a.truth != b.truth || a.provenance != b.provenance)
    return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a.samples[i].global, b.samples[i].global)) return false;
    if (a.samples[i].local.rows() != b.samples[i].local.rows()) return false;
    if (!same_bits(a.samples[i].local.data(), b.samples[i].local.data())) return false;
  }
  return true;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Relative path -> contents for every regular file below `root`.
inline std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = read_bytes(e.path());
  return out;
}

}  // namespace testing
