#include "copr/model.hpp"

#include <cmath>
#include <stdexcept>

#include "copr/binio.hpp"

namespace copr {

namespace {
constexpr char kCheckpointMagic[8] = {'C', 'O', 'P', 'R', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kAlphaEps = 1e-6;
}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

CtrModel::CtrModel(ModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.field_vocabs.empty()) throw std::invalid_argument("model: no feature fields");
  if (spec_.embed_dim == 0) throw std::invalid_argument("model: embed_dim must be positive");

  std::size_t off = 0;
  emb_off_.reserve(spec_.field_vocabs.size());
  for (const auto vocab : spec_.field_vocabs) {
    if (vocab == 0) throw std::invalid_argument("model: empty field vocabulary");
    emb_off_.push_back(off);
    off += static_cast<std::size_t>(vocab) * spec_.embed_dim;
  }

  auto build_mlp = [&](const std::vector<std::uint32_t>& hidden) {
    std::vector<Linear> layers;
    std::uint32_t in = input_dim();
    for (const auto h : hidden) {
      if (h == 0) throw std::invalid_argument("model: zero-width hidden layer");
      Linear l{off, 0, in, h};
      off += static_cast<std::size_t>(in) * h;
      l.b_off = off;
      off += h;
      layers.push_back(l);
      in = h;
    }
    Linear out_layer{off, 0, in, 1};
    off += in;
    out_layer.b_off = off;
    off += 1;
    layers.push_back(out_layer);
    return layers;
  };

  pred_ = build_mlp(spec_.pred_hidden);
  if (spec_.has_relaxation) relax_ = build_mlp(spec_.relax_hidden);
  params_.assign(off, 0.0);
}

void CtrModel::init_params(Rng& rng) {
  const double emb_limit = 1.0 / std::sqrt(static_cast<double>(spec_.embed_dim));
  for (std::size_t f = 0; f < spec_.field_vocabs.size(); ++f) {
    const std::size_t n = static_cast<std::size_t>(spec_.field_vocabs[f]) * spec_.embed_dim;
    for (std::size_t i = 0; i < n; ++i) {
      params_[emb_off_[f] + i] = rng.uniform(-emb_limit, emb_limit);
    }
  }
  auto init_mlp = [&](const std::vector<Linear>& layers, bool relax_net) {
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const Linear& l = layers[li];
      const bool last = li + 1 == layers.size();
      double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
      // The relaxation output starts as a near-constant 1 so alpha ~ 1:
      // the symmetric deviation penalty is minimized there and the output
      // ReLU starts in its live region.
      if (relax_net && last) limit *= 0.05;
      for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i) {
        params_[l.w_off + i] = rng.uniform(-limit, limit);
      }
      for (std::size_t i = 0; i < l.out; ++i) params_[l.b_off + i] = 0.0;
      if (last) params_[l.b_off] = relax_net ? 1.0 : spec_.output_bias_init;
    }
  };
  init_mlp(pred_, false);
  if (spec_.has_relaxation) init_mlp(relax_, true);
}

void CtrModel::embed_concat(std::span<const std::uint32_t> feats, std::span<double> x_out) const {
  if (feats.size() != spec_.field_vocabs.size()) {
    throw std::invalid_argument("embed_concat: expected " +
                                std::to_string(spec_.field_vocabs.size()) + " feature ids");
  }
  if (x_out.size() != input_dim()) {
    throw std::invalid_argument("embed_concat: output buffer has wrong length");
  }
  const std::uint32_t dim = spec_.embed_dim;
  for (std::size_t f = 0; f < feats.size(); ++f) {
    if (feats[f] >= spec_.field_vocabs[f]) {
      throw std::out_of_range("embed_concat: feature id " + std::to_string(feats[f]) +
                              " out of range for field " + std::to_string(f));
    }
    const double* row = params_.data() + emb_off_[f] + static_cast<std::size_t>(feats[f]) * dim;
    double* dst = x_out.data() + f * dim;
    for (std::uint32_t d = 0; d < dim; ++d) dst[d] = row[d];
  }
}

void CtrModel::mlp_forward(const std::vector<Linear>& layers, std::span<const double> x,
                           MlpCache& cache) const {
  cache.x.assign(x.begin(), x.end());
  cache.pre.resize(layers.size());
  cache.act.resize(layers.size());
  const double* in = cache.x.data();
  std::size_t in_dim = x.size();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Linear& l = layers[li];
    auto& pre = cache.pre[li];
    pre.resize(l.out);
    const double* W = params_.data() + l.w_off;
    const double* b = params_.data() + l.b_off;
    for (std::uint32_t o = 0; o < l.out; ++o) {
      const double* wrow = W + static_cast<std::size_t>(o) * l.in;
      double acc = b[o];
      for (std::uint32_t i = 0; i < l.in; ++i) acc += wrow[i] * in[i];
      pre[o] = acc;
    }
    const bool last = li + 1 == layers.size();
    if (!last) {
      auto& act = cache.act[li];
      act.resize(l.out);
      for (std::uint32_t o = 0; o < l.out; ++o) act[o] = pre[o] > 0.0 ? pre[o] : 0.0;
      in = act.data();
      in_dim = l.out;
    } else {
      cache.out = pre[0];
    }
  }
  (void)in_dim;
  cache.valid = true;
}

void CtrModel::mlp_backward(const std::vector<Linear>& layers, const MlpCache& cache, double dout,
                            std::span<double> grad, std::span<double> dx) const {
  if (!cache.valid) throw std::logic_error("backward called before forward");
  thread_local std::vector<double> delta;
  thread_local std::vector<double> delta_prev;
  delta.assign(1, dout);
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Linear& l = layers[li];
    const double* in = li == 0 ? cache.x.data() : cache.act[li - 1].data();
    double* gW = grad.data() + l.w_off;
    double* gb = grad.data() + l.b_off;
    delta_prev.assign(l.in, 0.0);
    for (std::uint32_t o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d != 0.0) {
        double* gw_row = gW + static_cast<std::size_t>(o) * l.in;
        const double* wrow = params_.data() + l.w_off + static_cast<std::size_t>(o) * l.in;
        for (std::uint32_t i = 0; i < l.in; ++i) {
          gw_row[i] += d * in[i];
          delta_prev[i] += d * wrow[i];
        }
      }
      gb[o] += d;
    }
    if (li == 0) {
      for (std::uint32_t i = 0; i < l.in; ++i) dx[i] += delta_prev[i];
    } else {
      const auto& pre = cache.pre[li - 1];
      for (std::size_t i = 0; i < delta_prev.size(); ++i) {
        delta_prev[i] = pre[i] > 0.0 ? delta_prev[i] : 0.0;
      }
      delta.swap(delta_prev);
    }
  }
}

double CtrModel::forward_pctr(std::span<const double> x, MlpCache* cache) const {
  if (x.size() != input_dim()) throw std::invalid_argument("forward_pctr: dimension mismatch");
  thread_local MlpCache scratch;
  MlpCache& c = cache ? *cache : scratch;
  mlp_forward(pred_, x, c);
  return sigmoid(c.out);
}

double CtrModel::forward_alpha(std::span<const double> x, MlpCache* cache) const {
  if (!spec_.has_relaxation) {
    throw std::logic_error("forward_alpha called on a model without a relaxation net");
  }
  if (x.size() != input_dim()) throw std::invalid_argument("forward_alpha: dimension mismatch");
  thread_local MlpCache scratch;
  MlpCache& c = cache ? *cache : scratch;
  mlp_forward(relax_, x, c);
  return (c.out > 0.0 ? c.out : 0.0) + kAlphaEps;
}

void CtrModel::backward_pred(const MlpCache& cache, double dlogit, std::span<double> grad,
                             std::span<double> dx) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("backward_pred: bad grad size");
  mlp_backward(pred_, cache, dlogit, grad, dx);
}

void CtrModel::backward_relax(const MlpCache& cache, double dalpha, std::span<double> grad,
                              std::span<double> dx) const {
  if (!spec_.has_relaxation) throw std::logic_error("backward_relax: no relaxation net");
  if (grad.size() != params_.size()) throw std::invalid_argument("backward_relax: bad grad size");
  const double dout = cache.out > 0.0 ? dalpha : 0.0;  // output ReLU
  mlp_backward(relax_, cache, dout, grad, dx);
}

void CtrModel::scatter_embed_grad(std::span<const std::uint32_t> feats,
                                  std::span<const double> dx, std::span<double> grad) const {
  const std::uint32_t dim = spec_.embed_dim;
  for (std::size_t f = 0; f < feats.size(); ++f) {
    double* dst = grad.data() + emb_off_[f] + static_cast<std::size_t>(feats[f]) * dim;
    const double* src = dx.data() + f * dim;
    for (std::uint32_t d = 0; d < dim; ++d) dst[d] += src[d];
  }
}

void CtrModel::sgd_step(std::span<const double> grad, double lr) {
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("sgd_step: gradient shape mismatch");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] -= lr * grad[i];
}

std::span<const double> CtrModel::embedding_row(std::size_t field, std::uint32_t id) const {
  return {params_.data() + emb_off_[field] + static_cast<std::size_t>(id) * spec_.embed_dim,
          spec_.embed_dim};
}

std::span<const double> CtrModel::pred_weights(std::size_t layer) const {
  const Linear& l = pred_.at(layer);
  return {params_.data() + l.w_off, static_cast<std::size_t>(l.in) * l.out};
}
std::span<const double> CtrModel::pred_bias(std::size_t layer) const {
  const Linear& l = pred_.at(layer);
  return {params_.data() + l.b_off, l.out};
}
std::span<const double> CtrModel::relax_weights(std::size_t layer) const {
  const Linear& l = relax_.at(layer);
  return {params_.data() + l.w_off, static_cast<std::size_t>(l.in) * l.out};
}
std::span<const double> CtrModel::relax_bias(std::size_t layer) const {
  const Linear& l = relax_.at(layer);
  return {params_.data() + l.b_off, l.out};
}

void CtrModel::save(const std::string& path, std::uint64_t world_digest,
                    const std::string& tag) const {
  BinaryWriter w(path);
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(world_digest);
  w.u64(tag.size());
  for (char c : tag) w.u8(static_cast<std::uint8_t>(c));
  w.u64(spec_.field_vocabs.size());
  for (auto v : spec_.field_vocabs) w.u32(v);
  w.u32(spec_.embed_dim);
  w.u64(spec_.pred_hidden.size());
  for (auto v : spec_.pred_hidden) w.u32(v);
  w.u8(spec_.has_relaxation ? 1 : 0);
  w.u64(spec_.relax_hidden.size());
  for (auto v : spec_.relax_hidden) w.u32(v);
  w.f64(spec_.output_bias_init);
  w.f64_vec(params_);
  w.close();
}

CtrModel CtrModel::load(const std::string& path, std::uint64_t expected_world_digest) {
  return load(path, expected_world_digest, nullptr);
}

CtrModel CtrModel::load(const std::string& path, std::uint64_t expected_world_digest,
                        std::string* tag_out) {
  BinaryReader r(path);
  r.expect_magic(kCheckpointMagic);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto digest = r.u64();
  if (digest != expected_world_digest) {
    throw std::runtime_error("checkpoint world digest mismatch in " + path +
                             ": model was trained against a different world config");
  }
  const auto tag_len = r.u64();
  std::string tag(tag_len, '\0');
  for (auto& c : tag) c = static_cast<char>(r.u8());
  if (tag_out) *tag_out = tag;

  ModelSpec spec;
  const auto n_fields = r.u64();
  spec.field_vocabs.resize(n_fields);
  for (auto& v : spec.field_vocabs) v = r.u32();
  spec.embed_dim = r.u32();
  const auto n_pred = r.u64();
  spec.pred_hidden.resize(n_pred);
  for (auto& v : spec.pred_hidden) v = r.u32();
  spec.has_relaxation = r.u8() != 0;
  const auto n_relax = r.u64();
  spec.relax_hidden.resize(n_relax);
  for (auto& v : spec.relax_hidden) v = r.u32();
  spec.output_bias_init = r.f64();

  CtrModel model(spec);
  auto params = r.f64_vec();
  if (params.size() != model.params_.size()) {
    throw std::runtime_error("checkpoint parameter count mismatch in " + path);
  }
  model.params_ = std::move(params);
  return model;
}

}  // namespace copr
