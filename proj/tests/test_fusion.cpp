#include <doctest.h>

#include "nnr/fusion.hpp"
#include "nnr/model.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace nnr;
using nnr::testing::Mat;
using nnr::testing::random_matrix;

namespace {

template <typename S>
Tensor<S> row_of_values(std::initializer_list<S> v) {
  Matrix<S> m(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (S x : v) m(0, i++) = x;
  return Tensor<S>(m);
}

double oracle_dot(const Mat& a, const Mat& b) {
  double s = 0.0;
  for (Index i = 0; i < a.cols(); ++i) s += a(0, i) * b(0, i);
  return s;
}

struct EquivalenceError {
  double plain = 0.0;   // |a - b| / |b|
  double scaled = 0.0;  // |a - b| / sum_j |c_j mean_j|
};

// Pointwise relative error is unbounded when the score cancels to near zero,
// so single precision is judged against the magnitude of the summed terms.
template <typename S>
EquivalenceError max_equivalence_error(Index dim, int instances, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<Index> len(1, 50);
  EquivalenceError worst;
  for (int i = 0; i < instances; ++i) {
    const Index n = len(rng);
    Tensor<S> h(random_matrix(n, dim, rng).cast<S>().eval());
    Tensor<S> c(random_matrix(1, dim, rng).cast<S>().eval());
    Tensor<S> mean = user_embedding_late(h, n);
    const double a = static_cast<double>(score_late(h, n, c).item());
    const double b = static_cast<double>(score_early(mean, c).item());
    const double magnitude =
        (c.value().array().abs().template cast<double>() * mean.value().array().abs().template cast<double>()).sum();
    worst.plain = std::max(worst.plain, std::abs(a - b) / std::max(std::abs(b), 1e-300));
    worst.scaled = std::max(worst.scaled, std::abs(a - b) / std::max(magnitude, 1e-300));
  }
  return worst;
}

}  // namespace

TEST_CASE("score_early: worked examples and oracle") {
  CHECK(score_early(row_of_values<double>({1, 0}), row_of_values<double>({0, 1})).item() == 0.0);
  CHECK(score_early(row_of_values<double>({1, 1}), row_of_values<double>({1, 1})).item() == 2.0);
  CHECK(score_early(row_of_values<double>({1, 1}), row_of_values<double>({1, 1})).fusion_mode == FusionMode::early);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    Mat u = random_matrix(1, 37, rng);
    Mat c = random_matrix(1, 37, rng);
    const double s = score_early(Tensor<double>(u), Tensor<double>(c)).item();
    CHECK(std::abs(s - oracle_dot(u, c)) <= 1e-12 * std::max(1.0, std::abs(s)));
  }
  CHECK_THROWS_AS(score_early(row_of_values<double>({1, 1}), row_of_values<double>({1, 1, 1})), ShapeError);
}

TEST_CASE("score_late: worked examples") {
  Mat h(2, 2);
  h << 1, 0, 0, 1;
  RelevanceScore<double> s = score_late(Tensor<double>(h), 2, row_of_values<double>({2, 2}));
  CHECK(s.item() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s.fusion_mode == FusionMode::late);

  Rng rng(2);
  Mat one = random_matrix(1, 5, rng);
  Tensor<double> c(random_matrix(1, 5, rng));
  CHECK(std::abs(score_late(Tensor<double>(one), 1, c).item() - score_early(Tensor<double>(one), c).item()) < 1e-15);

  CHECK(score_late(Tensor<double>(h), 0, row_of_values<double>({2, 2})).item() == 0.0);
  CHECK_THROWS_AS(score_late(Tensor<double>(h), 2, row_of_values<double>({2, 2, 2})), ShapeError);
}

TEST_CASE("user_embedding_late: worked examples") {
  Mat h(2, 2);
  h << 2, 0, 0, 2;
  Mat u = user_embedding_late(Tensor<double>(h), 2).value();
  CHECK(u(0, 0) == 1.0);
  CHECK(u(0, 1) == 1.0);
  Mat one(1, 3);
  one << 0.5, -1, 3;
  CHECK((user_embedding_late(Tensor<double>(one), 1).value() - one).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(user_embedding_late(Tensor<double>(h), 0), DegenerateInputError);
}

TEST_CASE("late fusion: mean of dots equals dot of mean") {
  for (Index dim : {8, 64, 256}) {
    const EquivalenceError single = max_equivalence_error<float>(dim, 1000, 100 + static_cast<std::uint64_t>(dim));
    const EquivalenceError dbl = max_equivalence_error<double>(dim, 1000, 200 + static_cast<std::uint64_t>(dim));
    CHECK_MESSAGE(single.scaled < 1e-5, "dim " << dim << " float rel err " << single.scaled);
    CHECK_MESSAGE(dbl.scaled < 1e-10, "dim " << dim << " double rel err " << dbl.scaled);
    CHECK_MESSAGE(dbl.plain < 1e-10, "dim " << dim << " double pointwise rel err " << dbl.plain);
  }
}

TEST_CASE("score_late: linearity in the candidate and duplication invariance") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Index n = 1 + static_cast<Index>(i % 9);
    Mat h = random_matrix(n, 16, rng);
    Mat c1 = random_matrix(1, 16, rng);
    Mat c2 = random_matrix(1, 16, rng);
    const double a = 1.7, b = -0.4;
    Tensor<double> ht(h);
    const double lhs = score_late(ht, n, Tensor<double>(Mat(a * c1 + b * c2))).item();
    const double rhs = a * score_late(ht, n, Tensor<double>(c1)).item() + b * score_late(ht, n, Tensor<double>(c2)).item();
    CHECK(std::abs(lhs - rhs) < 1e-6);

    Mat doubled(2 * n, 16);
    doubled << h, h;
    const double once = score_late(ht, n, Tensor<double>(c1)).item();
    const double twice = score_late(Tensor<double>(doubled), 2 * n, Tensor<double>(c1)).item();
    CHECK(std::abs(once - twice) < 1e-6);
  }
}

TEST_CASE("score_late: every click receives gradient c / N") {
  Rng rng(4);
  for (Index n : {1, 3, 10}) {
    Tensor<double> h(random_matrix(n + 2, 6, rng), true);
    Tensor<double> c(random_matrix(1, 6, rng), true);
    score_late(h, n, c).value.backward();
    for (Index r = 0; r < n; ++r) {
      CHECK((h.grad().row(r) - c.value() / static_cast<double>(n)).cwiseAbs().maxCoeff() < 1e-15);
    }
    for (Index r = n; r < n + 2; ++r) CHECK(h.grad().row(r).cwiseAbs().maxCoeff() == 0.0);
    Mat mean = h.value().topRows(n).colwise().mean();
    CHECK((c.grad() - mean).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("score_late_all agrees with per-candidate scoring") {
  Rng rng(5);
  Tensor<double> h(random_matrix(7, 9, rng));
  Mat cands = random_matrix(5, 9, rng);
  Mat all = score_late_all(h, 5, Tensor<double>(cands)).value();
  REQUIRE(all.cols() == 5);
  for (Index j = 0; j < 5; ++j) {
    const double single = score_late(h, 5, Tensor<double>(Mat(cands.row(j)))).item();
    CHECK(std::abs(all(0, j) - single) < 1e-14);
  }
  CHECK(score_late_all(h, 0, Tensor<double>(cands)).value().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("late fusion registers no user-encoder parameters; news encoder identical across modes") {
  for (ModelVariant v : kAllVariants) {
    Rng r1(7), r2(7);
    Recommender<double> early(nnr::testing::small_config(v, FusionMode::early), r1);
    Recommender<double> late(nnr::testing::small_config(v, FusionMode::late), r2);
    CHECK(late.user_encoder() == nullptr);
    CHECK(early.user_encoder() != nullptr);
    Index late_ue = 0;
    for (const auto& p : late.parameters().all()) {
      if (p.name.rfind("ue.", 0) == 0) late_ue += p.tensor.size();
    }
    CHECK(late_ue == 0);
    for (const auto& p : late.parameters().all()) {
      REQUIRE(early.parameters().contains(p.name));
      CHECK(early.parameters().at(p.name).shape == p.shape);
    }
  }
}

TEST_CASE("Recommender::score: early, late, and cold-start histories") {
  for (ModelVariant v : kAllVariants) {
    for (FusionMode mode : {FusionMode::early, FusionMode::late}) {
      ModelConfig config = nnr::testing::small_config(v, mode);
      Rng rng(11);
      Recommender<double> model(config, rng);
      Tensor<double> h(random_matrix(5, config.d_model(), rng));
      Tensor<double> cands(random_matrix(3, config.d_model(), rng));
      Mat s = model.score(h, 4, 2, cands, {}).value();
      REQUIRE(s.cols() == 3);
      CHECK(s.allFinite());
      if (mode == FusionMode::late) {
        for (Index j = 0; j < 3; ++j) {
          const double expected = score_late(h, 4, Tensor<double>(Mat(cands.value().row(j)))).item();
          CHECK(std::abs(s(0, j) - expected) < 1e-12);
        }
      }
      CHECK(model.score(h, 0, 2, cands, {}).value().cwiseAbs().maxCoeff() == 0.0);
    }
  }
}
