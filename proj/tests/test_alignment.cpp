#include <cmath>
#include <random>

#include "doctest.h"
#include "namvp/alignment.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace namvp;
using testing::basis;
using testing::kind_of;
using testing::repeat_row;

namespace {

// Clean prompts sit on e_k; noisy prompts on e_{C+k}, orthogonal to every class.
PromptBank prototype_bank(std::size_t classes, std::size_t views, std::size_t dim) {
  PromptBank bank;
  bank.num_classes = classes;
  bank.views = views;
  bank.dim = dim;
  for (std::size_t k = 0; k < classes; ++k) {
    bank.clean.push_back(repeat_row(basis(dim, k), views));
    bank.noisy.push_back(repeat_row(basis(dim, classes + k), views));
  }
  return bank;
}

SampleFeatures sample_at(const Vector& v, std::size_t patches) {
  return {v, repeat_row(v, patches)};
}

}  // namespace

TEST_CASE("uot_distance examples") {
  AlignmentConfig cfg;
  SUBCASE("identical patches and prompts cost nothing") {
    const Vector u{0.6, 0.8, 0.0};
    const auto r = uot_distance(repeat_row(u, 4), repeat_row(u, 3), cfg);
    CHECK(std::abs(r.distance) < 1e-12);
  }
  SUBCASE("orthogonal patches move mass theta at unit cost") {
    const auto r = uot_distance(repeat_row(basis(4, 0), 5), repeat_row(basis(4, 1), 2), cfg);
    CHECK(std::abs(r.distance - cfg.theta) < 1e-6);
  }
  SUBCASE("row cap forces the remainder onto the opposite patch") {
    const Matrix local = Matrix::from_rows({{1, 0}, {-1, 0}});
    const Matrix prompt = Matrix::from_rows({{1, 0}});
    AlignmentConfig tight = cfg;
    tight.max_iter = 10000;
    tight.stop_delta = 1e-9;
    const auto r = uot_distance(local, prompt, tight);
    CHECK(std::abs(r.distance - 0.8) < 1e-3);

    Matrix cost(2, 1);
    cost(0, 0) = 0.0;
    cost(1, 0) = 2.0;
    const Matrix ref = oracle::uot_pattern_search(cost, {0.5, 0.5}, {0.9}, cfg.epsilon);
    CHECK(std::abs(r.distance - frobenius(cost, ref)) <= 0.02 * frobenius(cost, ref));
  }
}

TEST_CASE("align_sample threshold values") {
  SUBCASE("equal scores give phi one half") {
    const auto r = scores_to_result({0.3, 0.7}, {0.3, 0.1}, 0.5);
    CHECK(r.phi[0] == 0.5);
  }
  SUBCASE("logistic value at tau 1") {
    const auto r = scores_to_result({1.0}, {0.0}, 1.0);
    CHECK(std::abs(r.phi[0] - 0.26894142) < 1e-8);
  }
  SUBCASE("identical banks") {
    std::mt19937_64 rng(3);
    PromptBank bank = PromptBank::random(3, 2, 6, rng);
    bank.noisy = bank.clean;
    const SampleFeatures f{Vector(6, 0.0), testing::gaussian(4, 6, rng)};
    const auto r = align_sample(f, bank, AlignmentConfig{});
    for (double x : r.phi) CHECK(x == doctest::Approx(0.5).epsilon(1e-12));

    for (std::size_t k = 1; k < 3; ++k) bank.clean[k] = bank.clean[0];
    bank.noisy = bank.clean;
    const auto u = align_sample(f, bank, AlignmentConfig{});
    for (double x : u.p_clean) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("is_clean and predict examples") {
  AlignmentResult r;
  r.p_clean = {0.9, 0.05, 0.5};
  r.phi = {0.1, 0.6, 0.5};
  r.p_noisy = r.phi;
  CHECK(is_clean(r, 0));
  CHECK_FALSE(is_clean(r, 1));
  CHECK_FALSE(is_clean(r, 2));
  CHECK(kind_of([&] { is_clean(r, 3); }) == ErrorKind::LabelOutOfRange);

  AlignmentResult a;
  a.p_clean = {0.8, 0.2};
  a.p_noisy = {0.1, 0.1};
  CHECK(predict(a) == 0);
  a.p_clean = {0.5, 0.5};
  a.p_noisy = {0.9, 0.1};
  CHECK(predict(a) == 1);
  a.p_noisy = {0.5, 0.5};
  CHECK(predict(a) == 0);
}

TEST_CASE("prototype banks separate clean from flipped labels") {
  const auto bank = prototype_bank(3, 2, 8);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto r = align_sample(sample_at(basis(8, k), 4), bank, AlignmentConfig{});
    CHECK(is_clean(r, k));
    CHECK_FALSE(is_clean(r, (k + 1) % 3));
    CHECK(predict(r) == k);
  }
}

TEST_CASE("alignment invariants") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  std::uniform_real_distribution<double> log_tau(std::log(0.01), std::log(2.0));
  for (int trial = 0; trial < 20; ++trial) {
    PromptBank bank = PromptBank::random(4, 3, 6, rng, 1.0);
    bank.log_tau = log_tau(rng);
    AlignmentConfig cfg;
    SampleFeatures f{Vector(6, 1.0), testing::gaussian(5, 6, rng)};
    const auto r = align_sample(f, bank, cfg);

    double total = 0.0;
    for (double p : r.p_clean) total += p;
    CHECK(std::abs(total - 1.0) < 1e-9);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(std::abs(r.phi[k] - r.p_noisy[k]) <= 1e-12);
      CHECK(r.phi[k] > 0.0);
      CHECK(r.phi[k] < 1.0);
      const double clean_side = pairwise_softmax(r.s_noisy[k], r.s_clean[k], bank.tau());
      CHECK(std::abs(clean_side + r.phi[k] - 1.0) < 1e-12);
      for (double s : {r.s_clean[k], r.s_noisy[k]}) {
        CHECK(s >= 1.0 - 2.0 * cfg.theta - 1e-12);
        CHECK(s <= 1.0 + 1e-12);
      }
    }

    SampleFeatures g = f;
    for (std::size_t l = 0; l < g.local.rows(); ++l) {
      const double c = scale(rng);
      for (double& x : g.local.row(l)) x *= c;
    }
    const auto rs = align_sample(g, bank, cfg);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(std::abs(r.s_clean[k] - rs.s_clean[k]) < 1e-8);
      CHECK(std::abs(r.s_noisy[k] - rs.s_noisy[k]) < 1e-8);
      CHECK(std::abs(r.p_clean[k] - rs.p_clean[k]) < 1e-8);
      CHECK(std::abs(r.phi[k] - rs.phi[k]) < 1e-8);
    }
  }
}

TEST_CASE("raising a clean score is monotone in its class") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector sc(4), sn(4);
    for (double& x : sc) x = u(rng);
    for (double& x : sn) x = u(rng);
    const double tau = 0.1 + std::abs(u(rng));
    const std::size_t k = static_cast<std::size_t>(trial % 4);
    const auto lo = scores_to_result(sc, sn, tau);
    sc[k] += 0.05;
    const auto hi = scores_to_result(sc, sn, tau);
    CHECK(hi.p_clean[k] > lo.p_clean[k]);
    CHECK(hi.phi[k] < lo.phi[k]);
    CHECK((1.0 - hi.p_noisy[k]) * hi.p_clean[k] >= (1.0 - lo.p_noisy[k]) * lo.p_clean[k]);
  }
}

TEST_CASE("single patch, single view, full mass is one minus cosine") {
  std::mt19937_64 rng(31);
  AlignmentConfig cfg;
  cfg.theta = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = testing::gaussian(1, 5, rng);
    const Matrix b = testing::gaussian(1, 5, rng);
    const double cosine = dot(a.row(0), b.row(0)) / (l2_norm(a.row(0)) * l2_norm(b.row(0)));
    CHECK(std::abs(uot_distance(a, b, cfg).distance - (1.0 - cosine)) < 1e-6);
  }
}

TEST_CASE("prompt bank helpers") {
  std::mt19937_64 rng(1);
  PromptBank bank = PromptBank::random(2, 3, 4, rng);
  CHECK(bank.tau() == doctest::Approx(kDefaultTau).epsilon(1e-12));
  bank.validate();
  bank.log_tau = 50.0;
  CHECK(bank.tau() == doctest::Approx(10.0));
  bank.clean[1] = Matrix(3, 4);
  CHECK(kind_of([&] { bank.validate(); }) == ErrorKind::ZeroRow);

  AlignmentConfig cfg;
  cfg.theta = 1.5;
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidConfig);
}
