#include "seqcl/encoder.hpp"

#include "seqcl/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace seqcl {

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'Q', 'C', 'L', 'C', 'K', 'P', '1'};

void fill_uniform(RealMatrix& m, Rng& rng, double bound) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
}

void fill_uniform(RealVector& v, Rng& rng, double bound) {
  for (Index i = 0; i < v.size(); ++i) {
    v[i] = rng.uniform(-bound, bound);
  }
}

void check_config(const EncoderConfig& cfg) {
  if (cfg.input_dim < 1 || cfg.hidden_dim < 1 || cfg.num_layers < 1) {
    throw ValidationError("encoder: input_dim, hidden_dim, num_layers must be >= 1");
  }
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
    throw ValidationError("encoder: dropout_rate must be in [0, 1)");
  }
  if (cfg.static_dim < 0) {
    throw ValidationError("encoder: static_dim must be >= 0");
  }
}

void check_batch(const EncoderParams& params, const SequenceBatch& batch) {
  const Index n = batch.rows();
  const Index t_max = batch.max_len();
  if (n < 1 || t_max < 1) {
    throw ValidationError("encode: empty batch");
  }
  for (const RealMatrix& step : batch.steps) {
    if (step.rows() != n || step.cols() != params.cfg.input_dim) {
      throw ValidationError("encode: step shape does not match (N=" +
                            std::to_string(n) + ", D=" +
                            std::to_string(params.cfg.input_dim) + ")");
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (batch.lengths[static_cast<std::size_t>(i)] < 1) {
      throw ValidationError("encode: sample " + std::to_string(i) +
                            " has invalid length 0");
    }
    if (batch.lengths[static_cast<std::size_t>(i)] > t_max) {
      throw ValidationError("encode: sample " + std::to_string(i) +
                            " is longer than the padded batch");
    }
  }
  if (params.cfg.static_dim > 0) {
    if (batch.statics.rows() != n || batch.statics.cols() != params.cfg.static_dim) {
      throw ValidationError("encode: static features must be N x D_S");
    }
  }
}

double sig(double v) { return sigmoid(v); }

}  // namespace

Index param_count(const EncoderConfig& cfg, Index num_classes) {
  Index total = 0;
  for (Index l = 0; l < cfg.num_layers; ++l) {
    const Index d_in = l == 0 ? cfg.input_dim : cfg.hidden_dim;
    total += 4 * cfg.hidden_dim * (d_in + cfg.hidden_dim) + 4 * cfg.hidden_dim;
  }
  total += cfg.hidden_dim * cfg.static_dim;
  total += 2 * num_classes * cfg.hidden_dim;
  return total;
}

EncoderParams init_params(const EncoderConfig& cfg, Index num_classes,
                          std::uint64_t seed) {
  check_config(cfg);
  if (num_classes < 1) {
    throw ValidationError("init_params: num_classes must be >= 1");
  }
  const Index h = cfg.hidden_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  Rng rng(seed);

  EncoderParams params;
  params.cfg = cfg;
  params.num_classes = num_classes;
  params.layers.resize(static_cast<std::size_t>(cfg.num_layers));
  for (Index l = 0; l < cfg.num_layers; ++l) {
    const Index d_in = l == 0 ? cfg.input_dim : h;
    LstmLayer& layer = params.layers[static_cast<std::size_t>(l)];
    layer.w_input.resize(4 * h, d_in);
    layer.w_recur.resize(4 * h, h);
    layer.bias.resize(4 * h);
    fill_uniform(layer.w_input, rng, bound);
    fill_uniform(layer.w_recur, rng, bound);
    fill_uniform(layer.bias, rng, bound);
    layer.bias.segment(h, h).setOnes();  // forget gate opens the cell path
  }
  if (cfg.static_dim > 0) {
    params.w_static.resize(h, cfg.static_dim);
    fill_uniform(params.w_static, rng, bound);
  } else {
    params.w_static.resize(0, 0);
  }
  params.anchors.U.resize(num_classes, h);
  params.anchors.V.resize(num_classes, h);
  fill_uniform(params.anchors.U, rng, bound);
  fill_uniform(params.anchors.V, rng, bound);
  return params;
}

EncoderParams zeros_like(const EncoderParams& like) {
  EncoderParams z;
  z.cfg = like.cfg;
  z.num_classes = like.num_classes;
  z.layers.resize(like.layers.size());
  for (std::size_t l = 0; l < like.layers.size(); ++l) {
    z.layers[l].w_input = RealMatrix::Zero(like.layers[l].w_input.rows(),
                                           like.layers[l].w_input.cols());
    z.layers[l].w_recur = RealMatrix::Zero(like.layers[l].w_recur.rows(),
                                           like.layers[l].w_recur.cols());
    z.layers[l].bias = RealVector::Zero(like.layers[l].bias.size());
  }
  z.w_static = RealMatrix::Zero(like.w_static.rows(), like.w_static.cols());
  z.anchors.U = RealMatrix::Zero(like.anchors.U.rows(), like.anchors.U.cols());
  z.anchors.V = RealMatrix::Zero(like.anchors.V.rows(), like.anchors.V.cols());
  return z;
}

std::vector<ParamView> param_views(EncoderParams& params) {
  std::vector<ParamView> views;
  for (LstmLayer& layer : params.layers) {
    views.push_back({layer.w_input.data(), layer.w_input.size()});
    views.push_back({layer.w_recur.data(), layer.w_recur.size()});
    views.push_back({layer.bias.data(), layer.bias.size()});
  }
  if (params.w_static.size() > 0) {
    views.push_back({params.w_static.data(), params.w_static.size()});
  }
  views.push_back({params.anchors.U.data(), params.anchors.U.size()});
  views.push_back({params.anchors.V.data(), params.anchors.V.size()});
  return views;
}

std::vector<ParamView> param_views(const EncoderParams& params) {
  return param_views(const_cast<EncoderParams&>(params));
}

RealMatrix encode_forward(const EncoderParams& params,
                          const SequenceBatch& batch, bool training,
                          std::uint64_t dropout_seed, EncoderCache& cache) {
  check_config(params.cfg);
  check_batch(params, batch);
  const Index n = batch.rows();
  const Index t_max = batch.max_len();
  const Index h = params.cfg.hidden_dim;
  const Index n_layers = params.cfg.num_layers;
  const double rate = params.cfg.dropout_rate;
  const bool drop = training && rate > 0.0 && n_layers > 1;
  const double inv_keep = drop ? 1.0 / (1.0 - rate) : 1.0;

  cache.training = training;
  cache.dropout_seed = dropout_seed;
  auto resize_all = [&](std::vector<std::vector<RealMatrix>>& store) {
    store.assign(static_cast<std::size_t>(n_layers),
                 std::vector<RealMatrix>(static_cast<std::size_t>(t_max)));
  };
  resize_all(cache.inputs);
  resize_all(cache.gate_i);
  resize_all(cache.gate_f);
  resize_all(cache.gate_g);
  resize_all(cache.gate_o);
  resize_all(cache.cell);
  resize_all(cache.cell_tanh);
  resize_all(cache.hidden);

  for (Index l = 0; l < n_layers; ++l) {
    const LstmLayer& layer = params.layers[static_cast<std::size_t>(l)];
    RealMatrix h_state = RealMatrix::Zero(n, h);
    RealMatrix c_state = RealMatrix::Zero(n, h);
    for (Index t = 0; t < t_max; ++t) {
      const std::size_t lt = static_cast<std::size_t>(l);
      const std::size_t tt = static_cast<std::size_t>(t);
      RealMatrix x_t;
      if (l == 0) {
        x_t = batch.steps[tt];
      } else {
        x_t = cache.hidden[lt - 1][tt];
        if (drop) {
          for (Index r = 0; r < n; ++r) {
            for (Index c = 0; c < h; ++c) {
              const double u = uniform_hash01(
                  dropout_seed, static_cast<std::uint64_t>(l - 1),
                  static_cast<std::uint64_t>(t),
                  static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(h) +
                      static_cast<std::uint64_t>(c));
              x_t(r, c) = u < rate ? 0.0 : x_t(r, c) * inv_keep;
            }
          }
        }
      }

      RealMatrix pre(n, 4 * h);
      pre.noalias() = x_t * layer.w_input.transpose();
      pre.noalias() += h_state * layer.w_recur.transpose();
      pre.rowwise() += layer.bias.transpose();

      RealMatrix gi = pre.block(0, 0, n, h).unaryExpr(&sig);
      RealMatrix gf = pre.block(0, h, n, h).unaryExpr(&sig);
      RealMatrix gg = pre.block(0, 2 * h, n, h).array().tanh();
      RealMatrix go = pre.block(0, 3 * h, n, h).unaryExpr(&sig);

      RealMatrix c_new = gf.cwiseProduct(c_state) + gi.cwiseProduct(gg);
      RealMatrix ct = c_new.array().tanh();
      RealMatrix h_new = go.cwiseProduct(ct);

      // Samples already past their true length carry state unchanged, so the
      // final state equals the state at the last valid step.
      for (Index r = 0; r < n; ++r) {
        if (t >= batch.lengths[static_cast<std::size_t>(r)]) {
          h_new.row(r) = h_state.row(r);
          c_new.row(r) = c_state.row(r);
        }
      }

      cache.inputs[lt][tt] = std::move(x_t);
      cache.gate_i[lt][tt] = std::move(gi);
      cache.gate_f[lt][tt] = std::move(gf);
      cache.gate_g[lt][tt] = std::move(gg);
      cache.gate_o[lt][tt] = std::move(go);
      cache.cell_tanh[lt][tt] = std::move(ct);
      h_state = h_new;
      c_state = c_new;
      cache.hidden[lt][tt] = h_state;
      cache.cell[lt][tt] = c_state;
    }
  }

  RealMatrix z = cache.hidden[static_cast<std::size_t>(n_layers - 1)]
                             [static_cast<std::size_t>(t_max - 1)];
  if (params.cfg.static_dim > 0) {
    z.noalias() += batch.statics * params.w_static.transpose();
  }
  return z;
}

RealMatrix encode(const EncoderParams& params, const SequenceBatch& batch,
                  bool training, std::uint64_t dropout_seed) {
  EncoderCache cache;
  return encode_forward(params, batch, training, dropout_seed, cache);
}

EncoderParams encode_backward(const EncoderParams& params,
                              const SequenceBatch& batch,
                              const EncoderCache& cache,
                              const RealMatrix& grad_Z) {
  const Index n = batch.rows();
  const Index t_max = batch.max_len();
  const Index h = params.cfg.hidden_dim;
  const Index n_layers = params.cfg.num_layers;
  if (grad_Z.rows() != n || grad_Z.cols() != h) {
    throw ValidationError("encode_backward: grad_Z must be N x H");
  }
  const double rate = params.cfg.dropout_rate;
  const bool drop = cache.training && rate > 0.0 && n_layers > 1;
  const double inv_keep = drop ? 1.0 / (1.0 - rate) : 1.0;

  EncoderParams grads = zeros_like(params);
  if (params.cfg.static_dim > 0) {
    grads.w_static.noalias() = grad_Z.transpose() * batch.statics;
  }

  // Gradient flowing into each committed hidden state from the layer above
  // (or from Z, for the top layer at the last step).
  std::vector<RealMatrix> from_above(static_cast<std::size_t>(t_max),
                                     RealMatrix::Zero(n, h));
  from_above[static_cast<std::size_t>(t_max - 1)] = grad_Z;

  for (Index l = n_layers - 1; l >= 0; --l) {
    const std::size_t lt = static_cast<std::size_t>(l);
    const LstmLayer& layer = params.layers[lt];
    LstmLayer& layer_grads = grads.layers[lt];

    std::vector<RealMatrix> d_input(static_cast<std::size_t>(t_max));
    RealMatrix dh = RealMatrix::Zero(n, h);
    RealMatrix dc = RealMatrix::Zero(n, h);

    for (Index t = t_max - 1; t >= 0; --t) {
      const std::size_t tt = static_cast<std::size_t>(t);
      dh += from_above[tt];

      const RealMatrix& gi = cache.gate_i[lt][tt];
      const RealMatrix& gf = cache.gate_f[lt][tt];
      const RealMatrix& gg = cache.gate_g[lt][tt];
      const RealMatrix& go = cache.gate_o[lt][tt];
      const RealMatrix& ct = cache.cell_tanh[lt][tt];

      RealMatrix d_out = dh.cwiseProduct(ct);
      RealMatrix d_cell =
          dc + dh.cwiseProduct(go).cwiseProduct(
                   (1.0 - ct.array().square()).matrix());

      RealMatrix d_forget;
      if (t > 0) {
        d_forget = d_cell.cwiseProduct(cache.cell[lt][tt - 1]);
      } else {
        d_forget = RealMatrix::Zero(n, h);  // initial cell state is zero
      }
      RealMatrix d_in_gate = d_cell.cwiseProduct(gg);
      RealMatrix d_cand = d_cell.cwiseProduct(gi);
      RealMatrix dc_prev = d_cell.cwiseProduct(gf);

      RealMatrix pre_grad(n, 4 * h);
      pre_grad.block(0, 0, n, h) =
          d_in_gate.cwiseProduct(gi).cwiseProduct((1.0 - gi.array()).matrix());
      pre_grad.block(0, h, n, h) =
          d_forget.cwiseProduct(gf).cwiseProduct((1.0 - gf.array()).matrix());
      pre_grad.block(0, 2 * h, n, h) =
          d_cand.cwiseProduct((1.0 - gg.array().square()).matrix());
      pre_grad.block(0, 3 * h, n, h) =
          d_out.cwiseProduct(go).cwiseProduct((1.0 - go.array()).matrix());

      // Inactive samples contribute nothing at this step; their dh/dc pass
      // through to the previous step untouched.
      for (Index r = 0; r < n; ++r) {
        if (t >= batch.lengths[static_cast<std::size_t>(r)]) {
          pre_grad.row(r).setZero();
        }
      }

      layer_grads.w_input.noalias() += pre_grad.transpose() * cache.inputs[lt][tt];
      if (t > 0) {
        layer_grads.w_recur.noalias() +=
            pre_grad.transpose() * cache.hidden[lt][tt - 1];
      }
      layer_grads.bias.noalias() += pre_grad.colwise().sum().transpose();

      d_input[tt].noalias() = pre_grad * layer.w_input;

      RealMatrix dh_prev = pre_grad * layer.w_recur;
      for (Index r = 0; r < n; ++r) {
        if (t >= batch.lengths[static_cast<std::size_t>(r)]) {
          dh_prev.row(r) = dh.row(r);
          dc_prev.row(r) = dc.row(r);
        }
      }
      dh = std::move(dh_prev);
      dc = std::move(dc_prev);
    }

    if (l > 0) {
      // Map gradients through the inter-layer dropout mask.
      for (Index t = 0; t < t_max; ++t) {
        const std::size_t tt = static_cast<std::size_t>(t);
        if (drop) {
          for (Index r = 0; r < n; ++r) {
            for (Index c = 0; c < h; ++c) {
              const double u = uniform_hash01(
                  cache.dropout_seed, static_cast<std::uint64_t>(l - 1),
                  static_cast<std::uint64_t>(t),
                  static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(h) +
                      static_cast<std::uint64_t>(c));
              d_input[tt](r, c) = u < rate ? 0.0 : d_input[tt](r, c) * inv_keep;
            }
          }
        }
        from_above[tt] = std::move(d_input[tt]);
      }
    }
  }
  return grads;
}

EncoderParams encode_backward(const EncoderParams& params,
                              const SequenceBatch& batch,
                              const RealMatrix& grad_Z, bool training,
                              std::uint64_t dropout_seed) {
  EncoderCache cache;
  encode_forward(params, batch, training, dropout_seed, cache);
  return encode_backward(params, batch, cache, grad_Z);
}

void save_checkpoint(const std::string& path, const EncoderParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw RuntimeFailure("save_checkpoint: cannot open " + path);
  }
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::int64_t header[5] = {params.cfg.input_dim, params.cfg.hidden_dim,
                                  params.cfg.num_layers, params.cfg.static_dim,
                                  params.num_classes};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(&params.cfg.dropout_rate),
            sizeof(double));
  for (const ParamView& view : param_views(params)) {
    const std::int64_t size = view.size;
    out.write(reinterpret_cast<const char*>(&size), sizeof(size));
    out.write(reinterpret_cast<const char*>(view.data),
              static_cast<std::streamsize>(sizeof(double) * view.size));
  }
  if (!out) {
    throw RuntimeFailure("save_checkpoint: write failed for " + path);
  }
}

EncoderParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RuntimeFailure("load_checkpoint: cannot open " + path);
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ValidationError("load_checkpoint: " + path +
                          " is not a recognized checkpoint file");
  }
  std::int64_t header[5];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  EncoderConfig cfg;
  cfg.input_dim = header[0];
  cfg.hidden_dim = header[1];
  cfg.num_layers = header[2];
  cfg.static_dim = header[3];
  in.read(reinterpret_cast<char*>(&cfg.dropout_rate), sizeof(double));
  if (!in) {
    throw ValidationError("load_checkpoint: truncated header in " + path);
  }

  EncoderParams params = init_params(cfg, header[4], 0);
  for (const ParamView& view : param_views(params)) {
    std::int64_t size = 0;
    in.read(reinterpret_cast<char*>(&size), sizeof(size));
    if (!in || size != view.size) {
      throw ValidationError("load_checkpoint: block size mismatch in " + path);
    }
    in.read(reinterpret_cast<char*>(view.data),
            static_cast<std::streamsize>(sizeof(double) * view.size));
  }
  if (!in) {
    throw ValidationError("load_checkpoint: truncated data in " + path);
  }
  return params;
}

}  // namespace seqcl
