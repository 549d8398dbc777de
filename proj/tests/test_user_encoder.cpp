#include <doctest.h>

#include "nnr/user_encoder.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace nnr;
using nnr::testing::Mat;
using nnr::testing::random_matrix;
using nnr::testing::small_config;

namespace {

struct Fixture {
  explicit Fixture(ModelVariant v, std::uint64_t seed = 5) : config(small_config(v)), rng(seed), encoder(config, store, rng) {}

  ClickHistory<double> history(Index rows, Index length, int user_index = 2) {
    ClickHistory<double> h;
    h.news_embeddings = Tensor<double>(random_matrix(rows, config.d_model(), rng), true);
    h.length = length;
    h.user_index = user_index;
    if (config.variant == ModelVariant::npa) {
      h.user_id_embedding = Tensor<double>(random_matrix(1, config.user_id_dim, rng), true);
    }
    return h;
  }
  Tensor<double> candidate() { return Tensor<double>(random_matrix(1, config.d_model(), rng), true); }

  ModelConfig config;
  Rng rng;
  ParameterStore<double> store;
  UserEncoder<double> encoder;
};

bool needs_candidate(ModelVariant v) { return is_candidate_aware(v); }

}  // namespace

TEST_CASE("encode_user: NAML over identical rows returns that row") {
  Fixture fx(ModelVariant::naml);
  Mat row = random_matrix(1, fx.config.d_model(), fx.rng);
  ClickHistory<double> h;
  h.news_embeddings = Tensor<double>(Mat(row.replicate(5, 1)));
  h.length = 5;
  Mat u = fx.encoder.encode(h, nullptr, {}).vector.value();
  CHECK((u - row).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("encode_user: DKN with a single click returns that click") {
  Fixture fx(ModelVariant::dkn);
  for (int i = 0; i < 10; ++i) {
    ClickHistory<double> h = fx.history(1, 1);
    Tensor<double> c = fx.candidate();
    UserEmbedding<double> u = fx.encoder.encode(h, &c, {});
    CHECK(u.candidate_aware);
    CHECK((u.vector.value() - h.news_embeddings.value()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("encode_user: every variant passes finite-difference checks") {
  for (ModelVariant v : kAllVariants) {
    for (int s = 0; s < 20; ++s) {
      Fixture fx(v, 500 + s);
      const Index length = 1 + static_cast<Index>(s % 6);
      ClickHistory<double> h = fx.history(length + 2, length, 1 + s % 5);
      Tensor<double> c = fx.candidate();
      Mat readout = random_matrix(1, fx.config.d_model(), fx.rng);
      std::vector<nnr::testing::GradLeaf> leaves = nnr::testing::trainable_leaves(fx.store);
      leaves.push_back({h.news_embeddings, "history"});
      if (needs_candidate(v)) leaves.push_back({c, "candidate"});
      if (v == ModelVariant::npa) leaves.push_back({h.user_id_embedding, "user_id"});
      auto r = nnr::testing::gradient_check(
          leaves,
          [&] { return nnr::testing::random_readout(fx.encoder.encode(h, &c, {}).vector, readout); }, fx.rng, 1e-5,
          24);
      CHECK_MESSAGE(r.max_rel_error < 1e-4, to_string(v) << ": " << r.worst);
    }
  }
}

TEST_CASE("encode_user: candidate-agnostic variants ignore the candidate") {
  for (ModelVariant v : kAllVariants) {
    if (needs_candidate(v)) continue;
    Fixture fx(v);
    for (int i = 0; i < 20; ++i) {
      ClickHistory<double> h = fx.history(6, 4);
      Tensor<double> c1 = fx.candidate();
      Tensor<double> c2 = fx.candidate();
      UserEmbedding<double> a = fx.encoder.encode(h, &c1, {});
      UserEmbedding<double> b = fx.encoder.encode(h, &c2, {});
      UserEmbedding<double> none = fx.encoder.encode(h, nullptr, {});
      CHECK_FALSE(a.candidate_aware);
      CHECK((a.vector.value().array() == b.vector.value().array()).all());
      CHECK((a.vector.value().array() == none.vector.value().array()).all());
    }
  }
}

TEST_CASE("encode_user: candidate-aware variants respond to the candidate") {
  for (ModelVariant v : {ModelVariant::dkn, ModelVariant::caum}) {
    int differing = 0;
    for (int trial = 0; trial < 100; ++trial) {
      Fixture fx(v, 9000 + trial);
      ClickHistory<double> h = fx.history(4, 4);
      Tensor<double> c1 = fx.candidate();
      Tensor<double> c2 = fx.candidate();
      Mat a = fx.encoder.encode(h, &c1, {}).vector.value();
      Mat b = fx.encoder.encode(h, &c2, {}).vector.value();
      if ((a - b).cwiseAbs().maxCoeff() > 1e-6) ++differing;
    }
    CHECK_MESSAGE(differing >= 99, to_string(v) << " differing=" << differing);
  }
}

TEST_CASE("encode_user: padding rows never influence the output") {
  for (ModelVariant v : kAllVariants) {
    Fixture fx(v);
    for (int i = 0; i < 10; ++i) {
      const Index length = 1 + static_cast<Index>(i % 5);
      ClickHistory<double> h = fx.history(length, length);
      Tensor<double> c = fx.candidate();
      Mat reference = fx.encoder.encode(h, &c, {}).vector.value();
      CHECK(reference.cols() == fx.config.d_model());

      ClickHistory<double> padded = h;
      Mat extended(length + 7, fx.config.d_model());
      extended.topRows(length) = h.news_embeddings.value();
      extended.bottomRows(7) = random_matrix(7, fx.config.d_model(), fx.rng, 10.0);
      padded.news_embeddings = Tensor<double>(extended);
      Mat out = fx.encoder.encode(padded, &c, {}).vector.value();
      CHECK_MESSAGE((out - reference).cwiseAbs().maxCoeff() < 1e-12, to_string(v));
    }
  }
}

TEST_CASE("encode_user: error paths") {
  for (ModelVariant v : kAllVariants) {
    Fixture fx(v);
    Tensor<double> c = fx.candidate();
    ClickHistory<double> empty = fx.history(3, 0);
    CHECK_THROWS_AS(fx.encoder.encode(empty, &c, {}), DegenerateInputError);
    ClickHistory<double> h = fx.history(3, 3);
    if (needs_candidate(v)) CHECK_THROWS_AS(fx.encoder.encode(h, nullptr, {}), ConfigError);
    ClickHistory<double> narrow = h;
    narrow.news_embeddings = Tensor<double>(random_matrix(3, fx.config.d_model() + 1, fx.rng));
    CHECK_THROWS_AS(fx.encoder.encode(narrow, &c, {}), ShapeError);
  }
}

TEST_CASE("lookup_long_term_user: reserved row, forced masking, bounds, size") {
  Fixture fx(ModelVariant::lstur_ini);
  const Tensor<double>& table = fx.encoder.long_term_table();
  CHECK(table.rows() == fx.config.num_users);
  CHECK(table.cols() == fx.config.d_model());
  const auto& param = fx.store.at("ue.long_term");
  CHECK(param.tensor.size() == fx.config.num_users * fx.config.d_model());
  CHECK(param.frozen_padding_row);

  Mat unseen = lookup_long_term_user(0, table, 0.0, RunContext{}).value();
  CHECK(unseen.cwiseAbs().maxCoeff() == 0.0);

  Mat seen = lookup_long_term_user(3, table, 0.0, RunContext{}).value();
  CHECK((seen - table.value().row(3)).cwiseAbs().maxCoeff() == 0.0);

  Rng mask_rng(1);
  RunContext train{true, &mask_rng};
  for (int i = 0; i < 20; ++i) {
    CHECK(lookup_long_term_user(3, table, 1.0, train).value().cwiseAbs().maxCoeff() == 0.0);
  }
  // Evaluation never masks.
  CHECK(lookup_long_term_user(3, table, 1.0, RunContext{}).value().cwiseAbs().maxCoeff() > 0.0);

  int zeroed = 0;
  for (int i = 0; i < 2000; ++i) {
    if (lookup_long_term_user(3, table, 0.5, train).value().cwiseAbs().maxCoeff() == 0.0) ++zeroed;
  }
  CHECK(zeroed > 850);
  CHECK(zeroed < 1150);

  CHECK_THROWS_AS(lookup_long_term_user(static_cast<int>(fx.config.num_users), table, 0.0, RunContext{}), IndexError);
  CHECK_THROWS_AS(lookup_long_term_user(-1, table, 0.0, RunContext{}), IndexError);

  Fixture con(ModelVariant::lstur_con);
  CHECK(con.encoder.long_term_table().cols() == con.config.d_model() / 2);
}

TEST_CASE("encode_user: LSTUR-ini with zero GRU weights decays the long-term row") {
  Fixture fx(ModelVariant::lstur_ini);
  // With all GRU weights zero every step halves the state: h' = 0.5 n + 0.5 h, n = 0.
  for (const auto& p : fx.store.all()) {
    if (p.name.rfind("ue.gru", 0) == 0) {
      Tensor<double> t = p.tensor;
      t.mutable_value().setZero();
    }
  }
  ClickHistory<double> h = fx.history(2, 2, 4);
  Mat u = fx.encoder.encode(h, nullptr, {}).vector.value();
  Mat expected = 0.25 * fx.encoder.long_term_table().value().row(4);
  CHECK((u - expected).cwiseAbs().maxCoeff() < 1e-12);
}
