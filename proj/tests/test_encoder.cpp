#include "seqcl/encoder.hpp"

#include "oracles.hpp"
#include "seqcl/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

using namespace seqcl;
namespace oracle = seqcl::testing;

namespace {

bool params_equal(const EncoderParams& a, const EncoderParams& b) {
  const auto va = param_views(a);
  const auto vb = param_views(b);
  if (va.size() != vb.size()) {
    return false;
  }
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (va[i].size != vb[i].size ||
        std::memcmp(va[i].data, vb[i].data,
                    sizeof(double) * static_cast<std::size_t>(va[i].size)) != 0) {
      return false;
    }
  }
  return true;
}

SequenceBatch random_batch(Rng& rng, Index n, Index t_max, Index d,
                           Index static_dim = 0) {
  SequenceBatch batch;
  batch.lengths.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    batch.lengths[static_cast<std::size_t>(i)] = rng.uniform_int(1, t_max);
  }
  batch.steps.assign(static_cast<std::size_t>(t_max), RealMatrix::Zero(n, d));
  for (Index t = 0; t < t_max; ++t) {
    for (Index i = 0; i < n; ++i) {
      if (t < batch.lengths[static_cast<std::size_t>(i)]) {
        for (Index j = 0; j < d; ++j) {
          batch.steps[static_cast<std::size_t>(t)](i, j) = rng.normal();
        }
      }
    }
  }
  if (static_dim > 0) {
    batch.statics.resize(n, static_dim);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < static_dim; ++j) {
        batch.statics(i, j) = rng.normal();
      }
    }
  }
  return batch;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("init determinism and layout") {
  EncoderConfig cfg;
  cfg.input_dim = 5;
  cfg.hidden_dim = 4;
  cfg.num_layers = 2;
  cfg.static_dim = 3;
  const EncoderParams a = init_params(cfg, 2, 99);
  const EncoderParams b = init_params(cfg, 2, 99);
  const EncoderParams c = init_params(cfg, 2, 100);
  CHECK(params_equal(a, b));
  CHECK_FALSE(params_equal(a, c));

  // Forget-gate bias block starts at 1.
  CHECK(a.layers[0].bias.segment(4, 4).isOnes());

  // Flat size equals the closed-form count.
  Index total = 0;
  for (const ParamView& view : param_views(a)) {
    total += view.size;
  }
  CHECK(total == param_count(cfg, 2));
}

TEST_CASE("parameter count near the reference two-layer binary model") {
  EncoderConfig cfg;
  cfg.input_dim = 76;
  cfg.hidden_dim = 16;
  cfg.num_layers = 2;
  const double count = static_cast<double>(param_count(cfg, 1));
  // Same order of magnitude as the benchmark's 7,697-parameter encoder; head
  // layouts differ so this is a sanity anchor, not an equality.
  CHECK(count / 7697.0 > 0.5);
  CHECK(count / 7697.0 < 2.0);
}

TEST_CASE("zero weights map a zero sequence to the zero embedding") {
  EncoderConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_dim = 4;
  cfg.num_layers = 2;
  EncoderParams params = init_params(cfg, 1, 1);
  for (const ParamView& view : param_views(params)) {
    std::memset(view.data, 0, sizeof(double) * static_cast<std::size_t>(view.size));
  }
  SequenceBatch batch;
  batch.lengths = {1};
  batch.steps = {RealMatrix::Zero(1, 3)};
  const RealMatrix z = encode(params, batch, false, 0);
  CHECK(z.isZero(0.0));
}

TEST_CASE("inference is deterministic") {
  Rng rng(31);
  EncoderConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden_dim = 5;
  cfg.num_layers = 2;
  const EncoderParams params = init_params(cfg, 1, 7);
  const SequenceBatch batch = random_batch(rng, 6, 7, 4);
  const RealMatrix z1 = encode(params, batch, false, 0);
  const RealMatrix z2 = encode(params, batch, false, 0);
  CHECK(oracle::bits_equal(z1, z2));
}

TEST_CASE("padding beyond the true length is ignored bitwise") {
  Rng rng(32);
  EncoderConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_dim = 4;
  cfg.num_layers = 2;
  const EncoderParams params = init_params(cfg, 1, 8);
  SequenceBatch batch = random_batch(rng, 4, 6, 3);
  const RealMatrix base = encode(params, batch, false, 0);

  SequenceBatch garbage = batch;
  garbage.steps.push_back(RealMatrix::Constant(4, 3, 1e50));
  garbage.steps.push_back(RealMatrix::Constant(4, 3, -777.0));
  for (Index t = 0; t < garbage.max_len(); ++t) {
    for (Index i = 0; i < 4; ++i) {
      if (t >= batch.lengths[static_cast<std::size_t>(i)]) {
        garbage.steps[static_cast<std::size_t>(t)].row(i).setConstant(1e99);
      }
    }
  }
  const RealMatrix padded = encode(params, garbage, false, 0);
  CHECK(oracle::bits_equal(base, padded));
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  Rng rng(33);
  EncoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 3;
  cfg.num_layers = 2;
  const EncoderParams params = init_params(cfg, 1, 9);
  const SequenceBatch batch = random_batch(rng, 3, 4, 2);
  const EncoderParams grads =
      encode_backward(params, batch, RealMatrix::Zero(3, 3), false, 0);
  for (const ParamView& view : param_views(grads)) {
    for (Index i = 0; i < view.size; ++i) {
      CHECK(view.data[i] == 0.0);
    }
  }
}

TEST_CASE("bptt gradients match finite differences") {
  Rng rng(34);
  EncoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 3;
  cfg.num_layers = 2;
  cfg.dropout_rate = 0.0;
  cfg.static_dim = 2;
  EncoderParams params = init_params(cfg, 1, 10);
  const SequenceBatch batch = random_batch(rng, 2, 3, 2, 2);

  // Scalar objective: weighted sum of Z so the upstream gradient is fixed.
  RealMatrix weights(2, 3);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 3; ++j) {
      weights(i, j) = rng.normal();
    }
  }
  const auto objective = [&]() {
    return (encode(params, batch, false, 0).array() * weights.array()).sum();
  };
  const EncoderParams analytic = encode_backward(params, batch, weights, false, 0);

  const auto a_views = param_views(analytic);
  const auto p_views = param_views(params);
  double worst = 0.0;
  for (std::size_t b = 0; b < p_views.size() - 2; ++b) {  // skip anchors
    for (Index i = 0; i < p_views[b].size; ++i) {
      const double orig = p_views[b].data[i];
      const double step = 1e-6;
      p_views[b].data[i] = orig + step;
      const double hi = objective();
      p_views[b].data[i] = orig - step;
      const double lo = objective();
      p_views[b].data[i] = orig;
      const double numeric = (hi - lo) / (2.0 * step);
      worst = std::max(worst, oracle::rel_err(a_views[b].data[i], numeric));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("bptt gradients with active dropout match finite differences") {
  Rng rng(35);
  EncoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 3;
  cfg.num_layers = 2;
  cfg.dropout_rate = 0.4;
  EncoderParams params = init_params(cfg, 1, 11);
  const SequenceBatch batch = random_batch(rng, 3, 3, 2);
  const std::uint64_t dropout_seed = 555;

  RealMatrix weights(3, 3);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) {
      weights(i, j) = rng.normal();
    }
  }
  const auto objective = [&]() {
    return (encode(params, batch, true, dropout_seed).array() * weights.array())
        .sum();
  };
  const EncoderParams analytic =
      encode_backward(params, batch, weights, true, dropout_seed);
  const auto a_views = param_views(analytic);
  const auto p_views = param_views(params);
  double worst = 0.0;
  for (std::size_t b = 0; b < p_views.size() - 2; ++b) {
    for (Index i = 0; i < p_views[b].size; ++i) {
      const double orig = p_views[b].data[i];
      p_views[b].data[i] = orig + 1e-6;
      const double hi = objective();
      p_views[b].data[i] = orig - 1e-6;
      const double lo = objective();
      p_views[b].data[i] = orig;
      worst = std::max(worst,
                       oracle::rel_err(a_views[b].data[i], (hi - lo) / 2e-6));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("length-1 sample gradients only touch the first timestep") {
  Rng rng(36);
  EncoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 3;
  cfg.num_layers = 1;
  const EncoderParams params = init_params(cfg, 1, 12);

  SequenceBatch padded;
  padded.lengths = {1};
  padded.steps.assign(3, RealMatrix::Zero(1, 2));
  padded.steps[0](0, 0) = 0.7;
  padded.steps[0](0, 1) = -0.4;

  SequenceBatch exact = padded;
  exact.steps.resize(1);

  RealMatrix grad_z(1, 3);
  grad_z << 0.3, -1.1, 0.5;
  const EncoderParams g_padded = encode_backward(params, padded, grad_z, false, 0);
  const EncoderParams g_exact = encode_backward(params, exact, grad_z, false, 0);
  CHECK(params_equal(g_padded, g_exact));
}

TEST_CASE("batch order equivariance") {
  Rng rng(37);
  EncoderConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_dim = 4;
  cfg.num_layers = 2;
  const EncoderParams params = init_params(cfg, 1, 13);
  const SequenceBatch batch = random_batch(rng, 5, 4, 3);
  RealMatrix grad_z(5, 4);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 4; ++j) {
      grad_z(i, j) = rng.normal();
    }
  }

  const std::vector<Index> perm = {4, 2, 0, 3, 1};
  SequenceBatch shuffled = batch;
  RealMatrix grad_shuffled(5, 4);
  for (Index i = 0; i < 5; ++i) {
    const Index src = perm[static_cast<std::size_t>(i)];
    shuffled.lengths[static_cast<std::size_t>(i)] =
        batch.lengths[static_cast<std::size_t>(src)];
    grad_shuffled.row(i) = grad_z.row(src);
    for (Index t = 0; t < batch.max_len(); ++t) {
      shuffled.steps[static_cast<std::size_t>(t)].row(i) =
          batch.steps[static_cast<std::size_t>(t)].row(src);
    }
  }

  const RealMatrix z = encode(params, batch, false, 0);
  const RealMatrix z_shuffled = encode(params, shuffled, false, 0);
  for (Index i = 0; i < 5; ++i) {
    CHECK((z_shuffled.row(i) - z.row(perm[static_cast<std::size_t>(i)]))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  const EncoderParams g1 = encode_backward(params, batch, grad_z, false, 0);
  const EncoderParams g2 =
      encode_backward(params, shuffled, grad_shuffled, false, 0);
  const auto v1 = param_views(g1);
  const auto v2 = param_views(g2);
  for (std::size_t b = 0; b < v1.size(); ++b) {
    for (Index i = 0; i < v1[b].size; ++i) {
      CHECK(std::abs(v1[b].data[i] - v2[b].data[i]) < 1e-9);
    }
  }
}

TEST_CASE("inverted dropout statistics") {
  Rng rng(38);
  EncoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 25;
  cfg.num_layers = 2;
  cfg.dropout_rate = 0.3;
  const EncoderParams params = init_params(cfg, 1, 14);
  const SequenceBatch batch = random_batch(rng, 250, 40, 2);

  EncoderCache dropped;
  encode_forward(params, batch, true, 777, dropped);
  EncoderCache clean;
  encode_forward(params, batch, false, 0, clean);

  long long zeros = 0;
  long long total = 0;
  double worst_scale_err = 0.0;
  const double inv_keep = 1.0 / (1.0 - cfg.dropout_rate);
  for (Index t = 0; t < batch.max_len(); ++t) {
    const RealMatrix& masked = dropped.inputs[1][static_cast<std::size_t>(t)];
    const RealMatrix& raw = clean.inputs[1][static_cast<std::size_t>(t)];
    for (Index i = 0; i < masked.rows(); ++i) {
      if (t >= batch.lengths[static_cast<std::size_t>(i)]) {
        continue;  // frozen region, not a real activation
      }
      for (Index j = 0; j < masked.cols(); ++j) {
        ++total;
        if (masked(i, j) == 0.0 && raw(i, j) != 0.0) {
          ++zeros;
        } else if (raw(i, j) != 0.0) {
          worst_scale_err = std::max(
              worst_scale_err, std::abs(masked(i, j) - raw(i, j) * inv_keep));
        }
      }
    }
  }
  CHECK(total >= 100000);
  CHECK(worst_scale_err == 0.0);  // kept activations are exactly h / (1 - p)
  const double zero_fraction =
      static_cast<double>(zeros) / static_cast<double>(total);
  CHECK(std::abs(zero_fraction - cfg.dropout_rate) < 0.01);
}

TEST_CASE("checkpoint round trip is bit exact") {
  EncoderConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dim = 5;
  cfg.num_layers = 2;
  cfg.static_dim = 2;
  cfg.dropout_rate = 0.25;
  const EncoderParams params = init_params(cfg, 3, 15);

  const std::string path = "checkpoint_roundtrip_test.bin";
  save_checkpoint(path, params);
  const EncoderParams loaded = load_checkpoint(path);
  CHECK(loaded.cfg.input_dim == cfg.input_dim);
  CHECK(loaded.cfg.hidden_dim == cfg.hidden_dim);
  CHECK(loaded.cfg.num_layers == cfg.num_layers);
  CHECK(loaded.cfg.static_dim == cfg.static_dim);
  CHECK(loaded.cfg.dropout_rate == cfg.dropout_rate);
  CHECK(loaded.num_classes == 3);
  CHECK(params_equal(params, loaded));
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_checkpoint("does_not_exist.bin"), RuntimeFailure);
}

TEST_CASE("invalid inputs are rejected") {
  EncoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 3;
  const EncoderParams params = init_params(cfg, 1, 16);

  SequenceBatch zero_len;
  zero_len.lengths = {0};
  zero_len.steps = {RealMatrix::Zero(1, 2)};
  CHECK_THROWS_AS(encode(params, zero_len, false, 0), ValidationError);

  SequenceBatch ok;
  ok.lengths = {1};
  ok.steps = {RealMatrix::Zero(1, 2)};
  CHECK_THROWS_AS(encode_backward(params, ok, RealMatrix::Zero(2, 3), false, 0),
                  ValidationError);
}

}  // TEST_SUITE
