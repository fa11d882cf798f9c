#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "copr/model.hpp"
#include "oracles.hpp"

using namespace copr;

namespace {

ModelSpec micro_spec(bool relax) {
  ModelSpec spec;
  spec.field_vocabs = {3, 2, 4, 2, 3};
  spec.embed_dim = 2;
  spec.pred_hidden = {4, 3};
  spec.has_relaxation = relax;
  spec.relax_hidden = {3};
  return spec;
}

}  // namespace

TEST_CASE("embed_concat semantics") {
  ModelSpec spec = micro_spec(false);
  CtrModel model(spec);

  SUBCASE("all-zero tables give the zero vector of correct length") {
    std::vector<double> x(model.input_dim(), 42.0);
    const std::vector<std::uint32_t> feats = {0, 1, 2, 0, 1};
    model.embed_concat(feats, x);
    CHECK(x.size() == 5 * 2);
    for (const double v : x) CHECK(v == 0.0);
  }

  SUBCASE("lookup returns the table row verbatim") {
    Rng rng(3);
    model.init_params(rng);
    std::vector<double> x(model.input_dim());
    const std::vector<std::uint32_t> feats = {2, 0, 3, 1, 2};
    model.embed_concat(feats, x);
    for (std::size_t f = 0; f < feats.size(); ++f) {
      const auto row = model.embedding_row(f, feats[f]);
      for (std::uint32_t d = 0; d < spec.embed_dim; ++d) {
        CHECK(x[f * spec.embed_dim + d] == row[d]);
      }
    }
  }

  SUBCASE("five fields at dim 16 concatenate to length 80") {
    ModelSpec wide = micro_spec(false);
    wide.embed_dim = 16;
    CtrModel m(wide);
    CHECK(m.input_dim() == 80);
  }

  SUBCASE("out-of-range feature id is rejected") {
    std::vector<double> x(model.input_dim());
    const std::vector<std::uint32_t> feats = {3, 0, 0, 0, 0};
    CHECK_THROWS_AS(model.embed_concat(feats, x), std::out_of_range);
  }
}

TEST_CASE("forward_pctr basics") {
  CtrModel model(micro_spec(false));

  SUBCASE("all-zero parameters give 0.5") {
    std::vector<double> x(model.input_dim(), 0.7);
    CHECK(model.forward_pctr(x) == 0.5);
  }

  SUBCASE("saturation at large logits") {
    // one linear layer: logit = bias; force bias = 30 through params()
    ModelSpec spec;
    spec.field_vocabs = {2};
    spec.embed_dim = 2;
    spec.pred_hidden = {};
    CtrModel m(spec);
    m.params().back() = 30.0;  // output bias
    std::vector<double> x(m.input_dim(), 0.0);
    CHECK(m.forward_pctr(x) == doctest::Approx(1.0).epsilon(1e-9));
    m.params().back() = -30.0;
    CHECK(m.forward_pctr(x) < 1e-9);
  }

  SUBCASE("dimension mismatch is rejected") {
    std::vector<double> x(model.input_dim() + 1);
    CHECK_THROWS_AS(model.forward_pctr(x), std::invalid_argument);
  }

  SUBCASE("matches the independently coded forward oracle to 1e-12") {
    CtrModel m(micro_spec(false));
    Rng rng(17);
    m.init_params(rng);
    std::vector<double> x(m.input_dim());
    for (std::uint32_t u1 = 0; u1 < 3; ++u1) {
      const std::vector<std::uint32_t> feats = {u1, u1 % 2, (u1 * 2) % 4, 1 - u1 % 2, u1 % 3};
      m.embed_concat(feats, x);
      const double got = m.forward_pctr(x);
      const double want = oracle::naive_pctr(m, feats);
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }

  SUBCASE("forward determinism") {
    CtrModel m(micro_spec(true));
    Rng rng(23);
    m.init_params(rng);
    std::vector<double> x(m.input_dim());
    const std::vector<std::uint32_t> feats = {1, 0, 2, 1, 0};
    m.embed_concat(feats, x);
    CHECK(m.forward_pctr(x) == m.forward_pctr(x));
    CHECK(m.forward_alpha(x) == m.forward_alpha(x));
  }
}

TEST_CASE("forward_alpha clamps and offsets") {
  ModelSpec spec;
  spec.field_vocabs = {2};
  spec.embed_dim = 2;
  spec.pred_hidden = {};
  spec.has_relaxation = true;
  spec.relax_hidden = {};
  CtrModel m(spec);
  std::vector<double> x(m.input_dim(), 0.0);

  // relaxation net is a single linear layer here; drive it via its bias,
  // which is the last parameter in the flat layout.
  auto params = m.params();

  SUBCASE("negative output clamps to the epsilon floor") {
    params.back() = -3.2;
    CHECK(m.forward_alpha(x) == 1e-6);
  }
  SUBCASE("positive output passes through plus epsilon") {
    params.back() = 0.7;
    CHECK(m.forward_alpha(x) == doctest::Approx(0.700001).epsilon(1e-12));
  }
  SUBCASE("alpha never drops below the floor") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
      params.back() = rng.uniform(-50.0, 50.0);
      CHECK(m.forward_alpha(x) >= 1e-6);
    }
  }
  SUBCASE("calling without a relaxation net is an error") {
    CtrModel plain(micro_spec(false));
    std::vector<double> xp(plain.input_dim(), 0.0);
    CHECK_THROWS_AS(plain.forward_alpha(xp), std::logic_error);
  }
}

TEST_CASE("relaxation initialization keeps alpha near 1") {
  ModelSpec spec = micro_spec(true);
  spec.embed_dim = 8;
  spec.pred_hidden = {16, 8};
  spec.relax_hidden = {16, 8};
  CtrModel m(spec);
  Rng rng(71);
  m.init_params(rng);
  std::vector<double> x(m.input_dim());
  Rng feat_rng(72);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::uint32_t> feats(5);
    for (std::size_t f = 0; f < 5; ++f) {
      feats[f] = static_cast<std::uint32_t>(feat_rng.below(spec.field_vocabs[f]));
    }
    m.embed_concat(feats, x);
    const double alpha = m.forward_alpha(x);
    CHECK(alpha > 0.9);
    CHECK(alpha < 1.1);
  }
}

TEST_CASE("adjusted_pctr is a plain unclamped product") {
  CHECK(CtrModel::adjusted_pctr(0.37, 1.0) == 0.37);
  CHECK(CtrModel::adjusted_pctr(0.2, 1.5) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(CtrModel::adjusted_pctr(0.9, 2.0) == doctest::Approx(1.8).epsilon(1e-15));
}

TEST_CASE("backward: constant loss gives zero gradients; untouched params stay zero") {
  CtrModel m(micro_spec(true));
  Rng rng(31);
  m.init_params(rng);
  std::vector<double> x(m.input_dim());
  const std::vector<std::uint32_t> feats = {1, 1, 3, 0, 2};
  m.embed_concat(feats, x);
  MlpCache cache;
  m.forward_pctr(x, &cache);

  std::vector<double> grad(m.param_count(), 0.0);
  std::vector<double> dx(m.input_dim(), 0.0);
  m.backward_pred(cache, 0.0, grad, dx);  // dLoss/dlogit = 0 for a constant loss
  for (const double g : grad) CHECK(g == 0.0);

  // a real gradient touches only looked-up embedding rows
  m.backward_pred(cache, 1.0, grad, dx);
  m.scatter_embed_grad(feats, dx, grad);
  const auto row_untouched = m.embedding_row(0, 0);  // field 0 uses id 1, so id 0 is untouched
  const auto* base = m.params().data();
  const std::size_t off = static_cast<std::size_t>(row_untouched.data() - base);
  for (std::size_t d = 0; d < row_untouched.size(); ++d) CHECK(grad[off + d] == 0.0);
}

TEST_CASE("backward before forward is rejected") {
  CtrModel m(micro_spec(false));
  MlpCache cache;  // never填 filled by a forward pass
  std::vector<double> grad(m.param_count(), 0.0);
  std::vector<double> dx(m.input_dim(), 0.0);
  CHECK_THROWS_AS(m.backward_pred(cache, 1.0, grad, dx), std::logic_error);
}

TEST_CASE("cross-entropy gradient vanishes at y_hat == y") {
  // With label y equal to the prediction, dL/dlogit = y_hat - y = 0.
  CtrModel m(micro_spec(false));
  std::vector<double> x(m.input_dim(), 0.0);
  MlpCache cache;
  const double y_hat = m.forward_pctr(x, &cache);  // all-zero params -> 0.5
  std::vector<double> grad(m.param_count(), 0.0);
  std::vector<double> dx(m.input_dim(), 0.0);
  m.backward_pred(cache, y_hat - 0.5, grad, dx);
  for (const double g : grad) CHECK(g == 0.0);
}

TEST_CASE("sgd_step arithmetic and null step") {
  CtrModel m(micro_spec(false));
  Rng rng(41);
  m.init_params(rng);
  const std::vector<double> before(m.params().begin(), m.params().end());
  std::vector<double> grad(m.param_count(), 2.0);

  SUBCASE("lr = 0 leaves the model unchanged") {
    m.sgd_step(grad, 0.0);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(m.params()[i] == before[i]);
  }
  SUBCASE("p=1, g=2, lr=0.1 gives 0.8") {
    m.params()[0] = 1.0;
    m.sgd_step(grad, 0.1);
    CHECK(m.params()[0] == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("shape mismatch is rejected") {
    std::vector<double> bad(m.param_count() + 1, 0.0);
    CHECK_THROWS_AS(m.sgd_step(bad, 0.1), std::invalid_argument);
  }
}

TEST_CASE("sgd on a convex quadratic decreases monotonically below the curvature bound") {
  // loss(p) = 0.5 * sum c_i p_i^2 with c_i in (0, 2]; exact gradient c_i p_i.
  std::vector<double> p = {1.0, -2.0, 0.5, 3.0};
  const std::vector<double> c = {2.0, 1.0, 0.5, 1.5};
  auto loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += 0.5 * c[i] * p[i] * p[i];
    return s;
  };
  double prev = loss();
  const double lr = 0.5;  // below 2/max(c) = 1
  for (int it = 0; it < 50; ++it) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * c[i] * p[i];
    const double cur = loss();
    CHECK(cur <= prev);
    prev = cur;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("checkpoint round-trip preserves parameters and enforces the digest") {
  CtrModel m(micro_spec(true));
  Rng rng(51);
  m.init_params(rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "copr_test_model.ckpt").string();
  m.save(path, 0xABCDu, "copr");

  std::string tag;
  const CtrModel loaded = CtrModel::load(path, 0xABCDu, &tag);
  CHECK(tag == "copr");
  CHECK(loaded.param_count() == m.param_count());
  for (std::size_t i = 0; i < m.param_count(); ++i) {
    CHECK(loaded.params()[i] == m.params()[i]);
  }
  CHECK_THROWS_WITH_AS(CtrModel::load(path, 0x1234u), doctest::Contains("digest mismatch"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("capacity gap: the teacher spec counts strictly more parameters") {
  ModelSpec student = micro_spec(true);
  ModelSpec teacher = micro_spec(false);
  teacher.embed_dim = 4;
  teacher.pred_hidden = {16, 8, 4};
  CHECK(CtrModel(teacher).param_count() > CtrModel(student).param_count());
}
