#ifndef COPR_MODEL_HPP_
#define COPR_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copr/rng.hpp"

namespace copr {

/*! Architecture description. relax_hidden applies only when has_relaxation. */
struct ModelSpec {
  std::vector<std::uint32_t> field_vocabs;  // one embedding table per field
  std::uint32_t embed_dim = 16;
  std::vector<std::uint32_t> pred_hidden = {64, 32, 16};
  bool has_relaxation = false;
  std::vector<std::uint32_t> relax_hidden = {32, 16, 8};
  double output_bias_init = 0.0;  // initial bias of the prediction logit

  std::uint32_t input_dim() const {
    return static_cast<std::uint32_t>(field_vocabs.size()) * embed_dim;
  }
};

/*!
 * Forward-pass record for one MLP evaluation: the input and every layer's
 * pre/post activation, exactly what backward needs. Reusable across calls;
 * buffers are resized once and overwritten.
 */
struct MlpCache {
  std::vector<double> x;
  std::vector<std::vector<double>> pre;  // preactivation per layer
  std::vector<std::vector<double>> act;  // post-ReLU per hidden layer
  double out = 0.0;                      // final linear output (pre-sigmoid / pre-ReLU)
  bool valid = false;
};

/*!
 * Embedding + MLP CTR model over categorical fields, with exact manual
 * gradients in double precision. Covers both the high-capacity ranking
 * teacher and the lightweight pre-ranking student; the student variant may
 * carry a relaxation net that shares the concatenated representation.
 *
 * Parameters live in one flat vector; gradient buffers use the same layout,
 * which keeps SGD, finite-difference checks, and checkpoints trivial.
 * Evaluation on a frozen model is pure and safe for concurrent readers.
 */
class CtrModel {
 public:
  explicit CtrModel(ModelSpec spec);

  /*! Xavier-uniform weights; relaxation output biased so alpha starts near 1. */
  void init_params(Rng& rng);

  const ModelSpec& spec() const { return spec_; }
  bool has_relaxation() const { return spec_.has_relaxation; }
  std::size_t param_count() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::uint32_t input_dim() const { return spec_.input_dim(); }

  /*! Concatenated per-field embedding rows; x_out.size() must equal input_dim. */
  void embed_concat(std::span<const std::uint32_t> feats, std::span<double> x_out) const;

  /*! pCTR = sigmoid(prediction MLP). Strictly inside (0, 1). */
  double forward_pctr(std::span<const double> x, MlpCache* cache = nullptr) const;

  /*! alpha = ReLU(relaxation MLP) + 1e-6. Requires has_relaxation. */
  double forward_alpha(std::span<const double> x, MlpCache* cache = nullptr) const;

  /*! Rank-adjusted score: alpha * pctr. A ranking score, deliberately unclamped. */
  static double adjusted_pctr(double pctr, double alpha) { return alpha * pctr; }

  /*!
   * Backpropagation through the prediction net. dlogit is dLoss/d(logit);
   * parameter gradients accumulate into grad (flat layout), the input
   * gradient accumulates into dx. Requires a cache from forward_pctr.
   */
  void backward_pred(const MlpCache& cache, double dlogit, std::span<double> grad,
                     std::span<double> dx) const;

  /*! Same for the relaxation net; dalpha is dLoss/d(alpha), the output ReLU
   *  is differentiated here. */
  void backward_relax(const MlpCache& cache, double dalpha, std::span<double> grad,
                      std::span<double> dx) const;

  /*! Routes dLoss/dx slices back into the looked-up embedding rows. */
  void scatter_embed_grad(std::span<const std::uint32_t> feats, std::span<const double> dx,
                          std::span<double> grad) const;

  /*! p <- p - lr * g. Throws on shape mismatch. */
  void sgd_step(std::span<const double> grad, double lr);

  /*! Introspection for oracles and serialization. */
  std::span<const double> embedding_row(std::size_t field, std::uint32_t id) const;
  std::size_t num_pred_layers() const { return pred_.size(); }
  std::size_t num_relax_layers() const { return relax_.size(); }
  /*! Row-major (out x in) weight block and bias of one layer. */
  std::span<const double> pred_weights(std::size_t layer) const;
  std::span<const double> pred_bias(std::size_t layer) const;
  std::span<const double> relax_weights(std::size_t layer) const;
  std::span<const double> relax_bias(std::size_t layer) const;

  /*! Versioned checkpoint with the world-config digest and a free-form tag. */
  void save(const std::string& path, std::uint64_t world_digest,
            const std::string& tag = "") const;
  /*! Throws when the stored digest differs from expected_world_digest. */
  static CtrModel load(const std::string& path, std::uint64_t expected_world_digest);
  static CtrModel load(const std::string& path, std::uint64_t expected_world_digest,
                       std::string* tag_out);

 private:
  struct Linear {
    std::size_t w_off = 0, b_off = 0;
    std::uint32_t in = 0, out = 0;
  };

  void mlp_forward(const std::vector<Linear>& layers, std::span<const double> x,
                   MlpCache& cache) const;
  void mlp_backward(const std::vector<Linear>& layers, const MlpCache& cache, double dout,
                    std::span<double> grad, std::span<double> dx) const;

  ModelSpec spec_;
  std::vector<double> params_;
  std::vector<std::size_t> emb_off_;  // per field
  std::vector<Linear> pred_;
  std::vector<Linear> relax_;
};

/*! Numerically stable logistic function. */
double sigmoid(double z);

}  // namespace copr

#endif  // COPR_MODEL_HPP_
