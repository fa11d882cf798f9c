#ifndef COPR_PIPELINE_HPP_
#define COPR_PIPELINE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "copr/cascade.hpp"
#include "copr/catalog.hpp"
#include "copr/config.hpp"
#include "copr/metrics.hpp"
#include "copr/model.hpp"
#include "copr/trainer.hpp"

namespace copr {

/*!
 * Typed view of the experiment config file. Loading validates sizes and
 * seeds against module preconditions, so downstream stages can assume a
 * consistent setup.
 */
struct ExperimentConfig {
  Config raw;
  WorldConfig world;

  // teacher (ranking model)
  std::uint32_t teacher_embed_dim = 32;
  std::vector<std::uint32_t> teacher_hidden = {256, 128, 64};
  double teacher_lr = 0.1;
  std::uint32_t teacher_epochs = 6;
  std::uint32_t teacher_batch = 256;
  std::uint64_t teacher_seed = 101;
  std::uint32_t teacher_holdout_every = 10;  // every Nth request held out; 0 = none

  // bootstrap exploration (uniform display) that feeds teacher training
  std::uint32_t boot_requests = 30000;
  std::uint32_t boot_candidates = 10;
  std::uint32_t boot_n_disp = 3;
  std::uint64_t boot_seed = 7;
  std::uint64_t boot_click_seed = 8;

  // ranking-log generation by the trained teacher
  std::uint32_t rank_requests = 40000;
  std::uint32_t rank_candidates = 10;
  RankingLogMode rank_mode = RankingLogMode::kPublic;
  std::uint64_t rank_seed = 9;

  // pre-ranking student
  std::uint32_t student_embed_dim = 16;
  std::vector<std::uint32_t> student_hidden = {64, 32, 16};
  std::vector<std::uint32_t> student_relax_hidden = {32, 16, 8};
  double student_lr = 0.1;
  std::uint32_t student_epochs = 5;
  std::uint32_t student_ctr_batch = 256;
  std::uint32_t student_pair_batch = 64;
  std::uint64_t student_seed = 1001;

  // objective knobs
  std::uint32_t chunk_k = 2;
  double lambda1 = 1.0;
  double lambda2 = 0.2;
  PairForm loss_form = PairForm::kDifference;
  double distill_weight = 1.0;
  double rankflow_score_weight = 1.0;
  double rankflow_select_weight = 1.0;

  // cascade funnel and evaluation
  std::uint32_t cascade_m = 100;
  std::uint32_t cascade_n_pre = 10;
  std::uint32_t cascade_n_disp = 1;
  std::uint32_t eval_requests = 20000;
  std::uint64_t eval_seed = 33;
  std::uint64_t eval_click_seed = 44;
  std::vector<int> eval_ks = {5, 10, 20, 50, 100};

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_config(const Config& cfg);
  void validate() const;

  ModelSpec teacher_spec() const;
  /*! Student architecture; the relaxation net is attached for copr variants. */
  ModelSpec student_spec(bool with_relaxation) const;
  /*! Training config for base|distill|rankflow|copr|copr-wo-dndcg. */
  TrainConfig student_train_config(const std::string& method) const;
};

/*! Method names the pipeline accepts, in the canonical comparison order. */
std::vector<std::string> pipeline_methods();

struct TeacherArtifacts {
  CtrModel model;
  double holdout_log_loss = 0.0;
  double initial_holdout_log_loss = 0.0;
  std::size_t n_impressions = 0;
  std::size_t n_ranking_logs = 0;
};

/*!
 * Bootstrap exploration -> teacher training -> ranking-log generation.
 * Writes teacher.ckpt, teacher_curve.csv, boot_requests.csv,
 * impressions.csv, rank_requests.csv and ranking.csv into logs_dir.
 */
TeacherArtifacts train_teacher_pipeline(const ExperimentConfig& cfg, const Catalog& catalog,
                                        const std::string& logs_dir);

/*!
 * Trains one student against the teacher's logs. Reads the files written by
 * train_teacher_pipeline from logs_dir; writes student_<method>.ckpt and
 * curve_<method>.csv into out_dir. Enforces the capacity gap: the teacher
 * must have strictly more parameters than the student.
 */
CtrModel train_prerank_pipeline(const ExperimentConfig& cfg, const Catalog& catalog,
                                const CtrModel& teacher, const std::string& method,
                                const std::string& logs_dir, const std::string& out_dir);

struct EvalModelResult {
  std::string name;
  ConsistencyReport consistency;
  std::uint64_t displays = 0;
  std::uint64_t clicks = 0;
  double ctr = 0.0;
  double rpm = 0.0;
  RpcCurve rpc_pctr;
  RpcCurve rpc_ecpm;
  double pctr_mae = 0.0;  // mean |student pctr - teacher pctr| over eval candidates
  std::vector<ImpressionLog> impressions;  // the simulated funnel's displays
};

struct EvalRun {
  double teacher_pctr_mean = 0.0;
  std::vector<EvalModelResult> models;
};

/*!
 * Evaluates each model against the teacher on a fresh seeded request set:
 * consistency metrics, RPC curves by raw pctr and by ECPM, and the
 * simulated funnel (student top n_pre -> teacher top n_disp -> clicks).
 * Teacher scores are computed once and shared across models. Click draws
 * use one stream per request, so methods that display the same ad see the
 * same outcome.
 */
EvalRun evaluate_models(const ExperimentConfig& cfg, const Catalog& catalog,
                        const CtrModel& teacher,
                        std::span<const std::pair<std::string, const CtrModel*>> models);

/*! Writes consistency.csv, system.csv, rpc.csv, alignment.csv and
 *  per-method impressions_<name>.csv into out_dir. */
void write_eval_outputs(const std::string& out_dir, const EvalRun& run,
                        const ExperimentConfig& cfg);

struct MethodSummary {
  std::string method;
  std::vector<double> hr10, ndcg10, map10, ctr, rpm;  // one entry per eval dir
  double mean_hr10 = 0.0, mean_ndcg10 = 0.0, mean_map10 = 0.0, mean_ctr = 0.0, mean_rpm = 0.0;
};

struct ReportSummary {
  std::vector<MethodSummary> methods;
  double spearman_hr10_rpm = 0.0;  // across methods, on means
};

/*! Aggregates evaluate outputs from one or more directories (seeds). */
ReportSummary build_report(std::span<const std::string> eval_dirs);
void write_report_csv(const std::string& path, const ReportSummary& summary);
std::string render_report_table(const ReportSummary& summary);

}  // namespace copr

#endif  // COPR_PIPELINE_HPP_
