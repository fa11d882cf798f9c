#ifndef COPR_TRAINER_HPP_
#define COPR_TRAINER_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "copr/catalog.hpp"
#include "copr/logs.hpp"
#include "copr/losses.hpp"
#include "copr/model.hpp"

namespace copr {

enum class Method { kBase, kDistill, kRankflow, kCopr };

/*! Accepts base | distill | rankflow | copr. */
Method method_from_string(const std::string& name);
std::string method_name(Method m);

struct TrainConfig {
  Method method = Method::kBase;
  std::uint32_t epochs = 5;
  double lr = 0.05;
  std::uint32_t ctr_batch = 256;
  std::uint32_t pair_batch = 64;  // ranking logs (chunk samples) per batch
  std::uint32_t chunk_k = 2;
  double lambda1 = 1.0;
  double lambda2 = 0.2;
  PairForm form = PairForm::kDifference;
  bool dndcg_weights = true;      // false reproduces the uniform-weight ablation
  double distill_weight = 1.0;
  double rankflow_score_weight = 1.0;
  double rankflow_select_weight = 1.0;
  std::uint32_t rankflow_select_top = 1;  // ranking-log entries marked as selected
  std::uint64_t seed = 0;
};

/*!
 * Per-epoch objective decomposition: total = l_ctr + lambda1*l_rank +
 * lambda2*l_reg. For distillation and rankflow the auxiliary alignment
 * terms are reported in the l_rank slot with lambda1 carrying their weight.
 */
struct LossReport {
  double l_ctr = 0.0;
  double l_rank = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/*! One impression record joined with features; teacher_pctr is attached
 *  on demand for distillation. */
struct CtrRecord {
  std::array<std::uint32_t, kNumFields> feats{};
  double y = 0.0;
  double teacher_pctr = -1.0;  // < 0 means absent
};

/*! Training corpora: impression records plus ranking logs with features. */
struct TrainData {
  struct LogEntry {
    std::uint32_t ad_id = 0;
    std::array<std::uint32_t, kNumFields> feats{};
    double pctr = 0.0;  // ranking-model score from the log
    double bid = 0.0;
  };
  struct Log {
    std::uint32_t request_id = 0;
    std::vector<LogEntry> entries;  // ECPM-descending, as logged
  };
  std::vector<CtrRecord> ctr_records;
  std::vector<Log> ranking_logs;
};

/*! Joins logs with catalog features through the request table. */
TrainData build_train_data(const Catalog& catalog, std::span<const RequestInfo> requests,
                           std::span<const RankedList> ranking_logs,
                           std::span<const ImpressionLog> impressions);

/*! Fills CtrRecord::teacher_pctr with the teacher's forward pass. */
void attach_teacher_scores(TrainData& data, const CtrModel& teacher);

/*! Mean binary cross entropy of the model on impression records. */
double mean_log_loss(const CtrModel& model, std::span<const CtrRecord> records);

// ---------------------------------------------------------------------------
// Loss kernels. Each adds the gradient of its weighted mean loss into grad
// (flat model layout) and returns the unweighted components. They are exact:
// every kernel passes central finite-difference checks on micro-models.
// ---------------------------------------------------------------------------

/*! Mean click cross entropy (hard labels). */
double ctr_loss_grad(const CtrModel& model, std::span<const CtrRecord> records,
                     std::span<double> grad, double weight = 1.0);

/*! Mean soft-label cross entropy against teacher_pctr; requires scores. */
double distill_loss_grad(const CtrModel& model, std::span<const CtrRecord> records,
                         std::span<double> grad, double weight = 1.0);

/*! Chunk representatives of one ranking log prepared for the rank loss. */
struct ChunkGroup {
  struct Rep {
    std::array<std::uint32_t, kNumFields> feats{};
    double bid = 0.0;
    std::uint32_t priority = 0;
  };
  std::vector<Rep> reps;  // chunk order: best chunk first
};

struct RankRegLoss {
  double l_rank = 0.0;
  double l_reg = 0.0;
};

/*!
 * Rank-alignment loss over all inter-chunk pairs of each group, weighted by
 * delta-NDCG of the chunk ranks (or uniformly), plus the symmetric
 * relaxation penalty averaged over distinct representatives. Each
 * representative is forwarded once; its adjusted score feeds every pair it
 * participates in. Adds lambda1 * d(l_rank) + lambda2 * d(l_reg) into grad.
 */
RankRegLoss rank_reg_loss_grad(const CtrModel& model, std::span<const ChunkGroup> groups,
                               PairForm form, bool dndcg_weights, double lambda1, double lambda2,
                               std::span<double> grad);

struct RankflowTerms {
  double score_mse = 0.0;
  double select_bce = 0.0;
};

/*!
 * Score alignment on ranking logs: mean squared error between the student
 * pctr and the logged ranking score over all entries, plus binary cross
 * entropy pushing the score up on selected entries.
 */
RankflowTerms rankflow_loss_grad(const CtrModel& model,
                                 std::span<const TrainData::LogEntry> entries,
                                 std::span<const std::uint8_t> selected, double w_score,
                                 double w_select, std::span<double> grad);

// ---------------------------------------------------------------------------

struct TrainResult {
  CtrModel model;
  std::vector<LossReport> curve;  // one report per epoch
};

/*!
 * Initializes a student from spec and runs shuffled mini-batch SGD for the
 * configured method. Deterministic given cfg.seed: shuffling, chunk
 * re-sampling (fresh per epoch), and gradient reduction order are all
 * derived from it. epochs = 0 returns the freshly initialized model.
 */
TrainResult train(const ModelSpec& student_spec, const TrainData& data, const TrainConfig& cfg);

void write_training_curve(const std::string& path, std::span<const LossReport> curve);

}  // namespace copr

#endif  // COPR_TRAINER_HPP_
