#include "copr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "copr/text.hpp"

namespace copr {

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

std::vector<std::uint32_t> to_u32_list(const std::vector<std::int64_t>& v, const char* key) {
  std::vector<std::uint32_t> out;
  for (const auto x : v) {
    if (x <= 0) throw ConfigError(std::string("config key '") + key + "' needs positive entries");
    out.push_back(static_cast<std::uint32_t>(x));
  }
  return out;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

/*! Candidate scores of one model over one request, plus derived orderings. */
struct ScoredRequest {
  std::vector<std::uint32_t> by_ecpm;  // ad ids, ecpm-descending
  std::vector<std::uint32_t> by_pctr;  // ad ids, raw-pctr-descending
};

std::vector<std::uint32_t> order_ids(const std::vector<std::uint32_t>& ads,
                                     const std::vector<double>& keys) {
  std::vector<std::uint32_t> idx(ads.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (keys[a] != keys[b]) return keys[a] > keys[b];
    return ads[a] < ads[b];
  });
  std::vector<std::uint32_t> out(ads.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) out[i] = ads[idx[i]];
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_config(Config::from_file(path));
}

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
  ExperimentConfig e;
  e.raw = cfg;
  e.world = WorldConfig::from_config(cfg);

  e.teacher_embed_dim = static_cast<std::uint32_t>(cfg.get_int("teacher.embed_dim", 32));
  e.teacher_hidden = to_u32_list(cfg.get_int_list("teacher.hidden", {256, 128, 64}),
                                 "teacher.hidden");
  e.teacher_lr = cfg.get_double("teacher.lr", 0.1);
  e.teacher_epochs = static_cast<std::uint32_t>(cfg.get_int("teacher.epochs", 6));
  e.teacher_batch = static_cast<std::uint32_t>(cfg.get_int("teacher.batch", 256));
  e.teacher_seed = static_cast<std::uint64_t>(cfg.get_int("teacher.seed", 101));
  e.teacher_holdout_every =
      static_cast<std::uint32_t>(cfg.get_int("teacher.holdout_every", 10));

  e.boot_requests = static_cast<std::uint32_t>(cfg.get_int("bootstrap.requests", 30000));
  e.boot_candidates = static_cast<std::uint32_t>(cfg.get_int("bootstrap.candidates", 10));
  e.boot_n_disp = static_cast<std::uint32_t>(cfg.get_int("bootstrap.n_disp", 3));
  e.boot_seed = static_cast<std::uint64_t>(cfg.get_int("bootstrap.seed", 7));
  e.boot_click_seed = static_cast<std::uint64_t>(cfg.get_int("bootstrap.click_seed", 8));

  e.rank_requests = static_cast<std::uint32_t>(cfg.get_int("ranking_logs.requests", 40000));
  e.rank_candidates = static_cast<std::uint32_t>(cfg.get_int("ranking_logs.candidates", 10));
  const std::string mode = cfg.get_str("ranking_logs.mode", "public");
  if (mode == "public") {
    e.rank_mode = RankingLogMode::kPublic;
  } else if (mode == "production") {
    e.rank_mode = RankingLogMode::kProduction;
  } else {
    throw ConfigError("config key 'ranking_logs.mode' must be public or production, got " + mode);
  }
  e.rank_seed = static_cast<std::uint64_t>(cfg.get_int("ranking_logs.seed", 9));

  e.student_embed_dim = static_cast<std::uint32_t>(cfg.get_int("student.embed_dim", 16));
  e.student_hidden = to_u32_list(cfg.get_int_list("student.hidden", {64, 32, 16}),
                                 "student.hidden");
  e.student_relax_hidden = to_u32_list(cfg.get_int_list("student.relax_hidden", {32, 16, 8}),
                                       "student.relax_hidden");
  e.student_lr = cfg.get_double("student.lr", 0.1);
  e.student_epochs = static_cast<std::uint32_t>(cfg.get_int("student.epochs", 5));
  e.student_ctr_batch = static_cast<std::uint32_t>(cfg.get_int("student.ctr_batch", 256));
  e.student_pair_batch = static_cast<std::uint32_t>(cfg.get_int("student.pair_batch", 64));
  e.student_seed = static_cast<std::uint64_t>(cfg.get_int("student.seed", 1001));

  e.chunk_k = static_cast<std::uint32_t>(cfg.get_int("copr.chunk_k", 2));
  e.lambda1 = cfg.get_double("copr.lambda1", 1.0);
  e.lambda2 = cfg.get_double("copr.lambda2", 0.2);
  const std::string form = cfg.get_str("copr.loss_form", "difference");
  if (form == "difference") {
    e.loss_form = PairForm::kDifference;
  } else if (form == "ratio") {
    e.loss_form = PairForm::kRatio;
  } else {
    throw ConfigError("config key 'copr.loss_form' must be difference or ratio, got " + form);
  }
  e.distill_weight = cfg.get_double("distill.weight", 1.0);
  e.rankflow_score_weight = cfg.get_double("rankflow.score_weight", 1.0);
  e.rankflow_select_weight = cfg.get_double("rankflow.select_weight", 1.0);

  e.cascade_m = static_cast<std::uint32_t>(cfg.get_int("cascade.m", 100));
  e.cascade_n_pre = static_cast<std::uint32_t>(cfg.get_int("cascade.n_pre", 10));
  e.cascade_n_disp = static_cast<std::uint32_t>(cfg.get_int("cascade.n_disp", 1));

  e.eval_requests = static_cast<std::uint32_t>(cfg.get_int("eval.requests", 20000));
  e.eval_seed = static_cast<std::uint64_t>(cfg.get_int("eval.seed", 33));
  e.eval_click_seed = static_cast<std::uint64_t>(cfg.get_int("eval.click_seed", 44));
  const auto ks = cfg.get_int_list("eval.ks", {5, 10, 20, 50, 100});
  e.eval_ks.clear();
  for (const auto k : ks) {
    if (k <= 0) throw ConfigError("config key 'eval.ks' needs positive entries");
    e.eval_ks.push_back(static_cast<int>(k));
  }

  e.validate();
  return e;
}

void ExperimentConfig::validate() const {
  world.validate();
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("experiment config: " + what);
  };
  check(teacher_epochs >= 0 && teacher_lr > 0.0, "teacher.lr must be positive");
  check(teacher_batch > 0, "teacher.batch must be positive");
  check(boot_requests > 0, "bootstrap.requests must be positive");
  check(boot_candidates > 0 && boot_candidates <= world.n_ads,
        "bootstrap.candidates must lie in [1, world.n_ads]");
  check(boot_n_disp > 0 && boot_n_disp <= boot_candidates,
        "bootstrap.n_disp must lie in [1, bootstrap.candidates]");
  check(rank_requests > 0, "ranking_logs.requests must be positive");
  check(rank_candidates > 0 && rank_candidates <= world.n_ads,
        "ranking_logs.candidates must lie in [1, world.n_ads]");
  check(student_lr > 0.0, "student.lr must be positive");
  check(student_ctr_batch > 0 && student_pair_batch > 0, "student batch sizes must be positive");
  check(chunk_k >= 1, "copr.chunk_k must be at least 1");
  check(lambda1 >= 0.0 && lambda2 >= 0.0, "copr lambda weights must be non-negative");
  check(distill_weight >= 0.0, "distill.weight must be non-negative");
  check(rankflow_score_weight >= 0.0 && rankflow_select_weight >= 0.0,
        "rankflow weights must be non-negative");
  check(cascade_m > 0 && cascade_m <= world.n_ads, "cascade.m must lie in [1, world.n_ads]");
  check(cascade_n_pre > 0 && cascade_n_pre <= cascade_m,
        "cascade.n_pre must lie in [1, cascade.m]");
  check(cascade_n_disp > 0 && cascade_n_disp <= cascade_n_pre,
        "cascade.n_disp must lie in [1, cascade.n_pre]");
  check(eval_requests > 0, "eval.requests must be positive");
  check(!eval_ks.empty(), "eval.ks must not be empty");
}

ModelSpec ExperimentConfig::teacher_spec() const {
  ModelSpec spec;
  spec.field_vocabs = {world.user_vocab[0], world.user_vocab[1], world.ad_vocab[0],
                       world.ad_vocab[1], world.context_vocab};
  spec.embed_dim = teacher_embed_dim;
  spec.pred_hidden = teacher_hidden;
  spec.has_relaxation = false;
  spec.output_bias_init = logit(world.base_ctr);
  return spec;
}

ModelSpec ExperimentConfig::student_spec(bool with_relaxation) const {
  ModelSpec spec;
  spec.field_vocabs = {world.user_vocab[0], world.user_vocab[1], world.ad_vocab[0],
                       world.ad_vocab[1], world.context_vocab};
  spec.embed_dim = student_embed_dim;
  spec.pred_hidden = student_hidden;
  spec.has_relaxation = with_relaxation;
  spec.relax_hidden = student_relax_hidden;
  spec.output_bias_init = logit(world.base_ctr);
  return spec;
}

TrainConfig ExperimentConfig::student_train_config(const std::string& method) const {
  TrainConfig tc;
  tc.epochs = student_epochs;
  tc.lr = student_lr;
  tc.ctr_batch = student_ctr_batch;
  tc.pair_batch = student_pair_batch;
  tc.chunk_k = chunk_k;
  tc.lambda1 = lambda1;
  tc.lambda2 = lambda2;
  tc.form = loss_form;
  tc.distill_weight = distill_weight;
  tc.rankflow_score_weight = rankflow_score_weight;
  tc.rankflow_select_weight = rankflow_select_weight;
  tc.rankflow_select_top = static_cast<std::uint32_t>(
      raw.get_int("rankflow.select_top", cascade_n_disp));
  tc.seed = student_seed;
  if (method == "copr-wo-dndcg") {
    tc.method = Method::kCopr;
    tc.dndcg_weights = false;
  } else {
    tc.method = method_from_string(method);
    tc.dndcg_weights = true;
  }
  return tc;
}

std::vector<std::string> pipeline_methods() {
  return {"base", "distill", "rankflow", "copr-wo-dndcg", "copr"};
}

TeacherArtifacts train_teacher_pipeline(const ExperimentConfig& cfg, const Catalog& catalog,
                                        const std::string& logs_dir) {
  ensure_dir(logs_dir);

  // Bootstrap exploration: uniform candidates, the first n_disp displayed.
  std::vector<RequestInfo> boot_infos(cfg.boot_requests);
  std::vector<ImpressionLog> impressions(cfg.boot_requests);
  std::vector<CtrRecord> holdout;
#pragma omp parallel for schedule(static)
  for (std::uint32_t rid = 0; rid < cfg.boot_requests; ++rid) {
    Rng req_rng = Rng::stream(cfg.boot_seed, rid);
    const Request req = gen_request(catalog, rid, cfg.boot_candidates, req_rng);
    boot_infos[rid] = {rid, req.user, req.context};
    Rng click_rng = Rng::stream(cfg.boot_click_seed, rid);
    ImpressionLog log;
    log.request_id = rid;
    for (std::uint32_t i = 0; i < cfg.boot_n_disp; ++i) {
      const auto ad = req.candidates[i];
      const double p = catalog.true_ctr(req.user, ad, req.context);
      log.entries.push_back({ad, static_cast<std::uint8_t>(click_rng.bernoulli(p))});
    }
    impressions[rid] = std::move(log);
  }

  write_requests(join_path(logs_dir, "boot_requests.csv"), boot_infos);
  write_impression_logs(join_path(logs_dir, "impressions.csv"), impressions);

  // Holdout split by request id, then teacher CTR training.
  std::vector<ImpressionLog> train_logs, holdout_logs;
  for (const auto& log : impressions) {
    const bool hold =
        cfg.teacher_holdout_every > 0 && log.request_id % cfg.teacher_holdout_every == 0;
    (hold ? holdout_logs : train_logs).push_back(log);
  }
  TrainData train_data = build_train_data(catalog, boot_infos, {}, train_logs);
  TrainData holdout_data = build_train_data(catalog, boot_infos, {}, holdout_logs);

  TrainConfig tc;
  tc.method = Method::kBase;
  tc.epochs = cfg.teacher_epochs;
  tc.lr = cfg.teacher_lr;
  tc.ctr_batch = cfg.teacher_batch;
  tc.seed = cfg.teacher_seed;

  TeacherArtifacts artifacts{CtrModel(cfg.teacher_spec()), 0.0, 0.0, train_data.ctr_records.size(),
                             0};
  {
    TrainConfig init_only = tc;
    init_only.epochs = 0;
    const auto initial = train(cfg.teacher_spec(), train_data, init_only);
    if (!holdout_data.ctr_records.empty()) {
      artifacts.initial_holdout_log_loss =
          mean_log_loss(initial.model, holdout_data.ctr_records);
    }
  }
  auto trained = train(cfg.teacher_spec(), train_data, tc);
  artifacts.model = std::move(trained.model);
  if (!holdout_data.ctr_records.empty()) {
    artifacts.holdout_log_loss = mean_log_loss(artifacts.model, holdout_data.ctr_records);
  }
  write_training_curve(join_path(logs_dir, "teacher_curve.csv"), trained.curve);

  // Ranking logs from the trained teacher. Request ids continue after the
  // bootstrap block so the two tables join without collisions. Production
  // mode funnels through the teacher's own top n_pre before logging.
  const std::uint32_t m =
      cfg.rank_mode == RankingLogMode::kPublic ? cfg.rank_candidates : cfg.cascade_m;
  std::vector<RequestInfo> rank_infos(cfg.rank_requests);
  std::vector<Request> rank_reqs(cfg.rank_requests);
#pragma omp parallel for schedule(static)
  for (std::uint32_t i = 0; i < cfg.rank_requests; ++i) {
    const std::uint32_t rid = cfg.boot_requests + i;
    Rng req_rng = Rng::stream(cfg.rank_seed, rid);
    rank_reqs[i] = gen_request(catalog, rid, m, req_rng);
    rank_infos[i] = {rid, rank_reqs[i].user, rank_reqs[i].context};
  }
  const auto ranking_logs =
      collect_ranking_logs(rank_reqs, &artifacts.model, artifacts.model, cfg.rank_mode,
                           cfg.cascade_n_pre, catalog);
  artifacts.n_ranking_logs = ranking_logs.size();

  write_requests(join_path(logs_dir, "rank_requests.csv"), rank_infos);
  write_ranking_logs(join_path(logs_dir, "ranking.csv"), ranking_logs);
  artifacts.model.save(join_path(logs_dir, "teacher.ckpt"), catalog.world_digest(), "teacher");
  return artifacts;
}

CtrModel train_prerank_pipeline(const ExperimentConfig& cfg, const Catalog& catalog,
                                const CtrModel& teacher, const std::string& method,
                                const std::string& logs_dir, const std::string& out_dir) {
  ensure_dir(out_dir);
  auto requests = read_requests(join_path(logs_dir, "boot_requests.csv"));
  {
    const auto rank_reqs = read_requests(join_path(logs_dir, "rank_requests.csv"));
    requests.insert(requests.end(), rank_reqs.begin(), rank_reqs.end());
  }
  const auto impressions = read_impression_logs(join_path(logs_dir, "impressions.csv"));
  const auto ranking_logs = read_ranking_logs(join_path(logs_dir, "ranking.csv"));

  TrainData data = build_train_data(catalog, requests, ranking_logs, impressions);

  const TrainConfig tc = cfg.student_train_config(method);
  const bool with_relax = tc.method == Method::kCopr;
  const ModelSpec spec = cfg.student_spec(with_relax);
  {
    const CtrModel probe(spec);
    if (teacher.param_count() <= probe.param_count()) {
      throw std::invalid_argument(
          "capacity gap violated: the ranking model must have strictly more parameters than "
          "the pre-ranking student");
    }
  }
  if (tc.method == Method::kDistill) attach_teacher_scores(data, teacher);

  auto result = train(spec, data, tc);
  result.model.save(join_path(out_dir, "student_" + method + ".ckpt"), catalog.world_digest(),
                    method);
  write_training_curve(join_path(out_dir, "curve_" + method + ".csv"), result.curve);
  return std::move(result.model);
}

EvalRun evaluate_models(const ExperimentConfig& cfg, const Catalog& catalog,
                        const CtrModel& teacher,
                        std::span<const std::pair<std::string, const CtrModel*>> models) {
  const std::uint32_t n_req = cfg.eval_requests;
  const std::uint32_t m = cfg.cascade_m;

  // Fixed evaluation request set.
  std::vector<Request> requests(n_req);
#pragma omp parallel for schedule(static)
  for (std::uint32_t rid = 0; rid < n_req; ++rid) {
    Rng req_rng = Rng::stream(cfg.eval_seed, rid);
    requests[rid] = gen_request(catalog, rid, m, req_rng);
  }

  // Teacher scores once, shared by every model under evaluation.
  std::vector<double> teacher_pctr(static_cast<std::size_t>(n_req) * m);
  std::vector<std::vector<std::uint32_t>> teacher_ecpm(n_req), teacher_by_pctr(n_req);
#pragma omp parallel for schedule(static)
  for (std::uint32_t rid = 0; rid < n_req; ++rid) {
    const Request& req = requests[rid];
    thread_local std::vector<double> x;
    x.resize(teacher.input_dim());
    std::vector<double> ecpm_keys(m), pctr_keys(m);
    for (std::uint32_t c = 0; c < m; ++c) {
      const auto feats = catalog.features(req.user, req.candidates[c], req.context);
      teacher.embed_concat(feats, x);
      const double p = teacher.forward_pctr(x);
      teacher_pctr[static_cast<std::size_t>(rid) * m + c] = p;
      pctr_keys[c] = p;
      ecpm_keys[c] = 1000.0 * catalog.bid(req.candidates[c]) * p;
    }
    teacher_ecpm[rid] = order_ids(req.candidates, ecpm_keys);
    teacher_by_pctr[rid] = order_ids(req.candidates, pctr_keys);
  }

  EvalRun run;
  run.teacher_pctr_mean =
      std::accumulate(teacher_pctr.begin(), teacher_pctr.end(), 0.0) /
      static_cast<double>(teacher_pctr.size());

  for (const auto& [name, model_ptr] : models) {
    const CtrModel& model = *model_ptr;
    EvalModelResult res;
    res.name = name;

    std::vector<std::vector<std::uint32_t>> pre_ecpm(n_req), pre_by_pctr(n_req);
    std::vector<ImpressionLog> impressions(n_req);
    std::vector<double> mae_parts(n_req, 0.0);

#pragma omp parallel for schedule(static)
    for (std::uint32_t rid = 0; rid < n_req; ++rid) {
      const Request& req = requests[rid];
      thread_local std::vector<double> x;
      x.resize(model.input_dim());
      std::vector<double> ecpm_keys(m), pctr_keys(m);
      for (std::uint32_t c = 0; c < m; ++c) {
        const auto feats = catalog.features(req.user, req.candidates[c], req.context);
        model.embed_concat(feats, x);
        const double y_hat = model.forward_pctr(x);
        double score = y_hat;
        if (model.has_relaxation()) {
          score = CtrModel::adjusted_pctr(y_hat, model.forward_alpha(x));
        }
        pctr_keys[c] = y_hat;
        ecpm_keys[c] = 1000.0 * catalog.bid(req.candidates[c]) * score;
        mae_parts[rid] +=
            std::abs(y_hat - teacher_pctr[static_cast<std::size_t>(rid) * m + c]);
      }
      pre_ecpm[rid] = order_ids(req.candidates, ecpm_keys);
      pre_by_pctr[rid] = order_ids(req.candidates, pctr_keys);

      // Funnel: student's ecpm top n_pre, re-ranked by cached teacher ecpm,
      // top n_disp displayed. One click stream per request: methods that
      // display the same ad observe the same outcome.
      std::unordered_map<std::uint32_t, double> teacher_ecpm_of;
      teacher_ecpm_of.reserve(m);
      for (std::uint32_t c = 0; c < m; ++c) {
        teacher_ecpm_of[req.candidates[c]] =
            1000.0 * catalog.bid(req.candidates[c]) *
            teacher_pctr[static_cast<std::size_t>(rid) * m + c];
      }
      std::vector<std::uint32_t> survivors(pre_ecpm[rid].begin(),
                                           pre_ecpm[rid].begin() + cfg.cascade_n_pre);
      std::sort(survivors.begin(), survivors.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double ea = teacher_ecpm_of.at(a), eb = teacher_ecpm_of.at(b);
        if (ea != eb) return ea > eb;
        return a < b;
      });
      Rng click_rng = Rng::stream(cfg.eval_click_seed, rid);
      ImpressionLog log;
      log.request_id = rid;
      for (std::uint32_t i = 0; i < cfg.cascade_n_disp; ++i) {
        const auto ad = survivors[i];
        const double p = catalog.true_ctr(req.user, ad, req.context);
        log.entries.push_back({ad, static_cast<std::uint8_t>(click_rng.bernoulli(p))});
      }
      impressions[rid] = std::move(log);
    }

    res.consistency = consistency_report(pre_ecpm, teacher_ecpm, cfg.eval_ks);
    res.rpc_ecpm = rpc_curve(pre_ecpm, teacher_ecpm);
    res.rpc_pctr = rpc_curve(pre_by_pctr, teacher_by_pctr);
    const auto [ctr, rpm] = ctr_rpm(impressions, catalog);
    res.ctr = ctr;
    res.rpm = rpm;
    for (const auto& log : impressions) {
      res.displays += log.entries.size();
      for (const auto& e : log.entries) res.clicks += e.y ? 1 : 0;
    }
    res.pctr_mae = std::accumulate(mae_parts.begin(), mae_parts.end(), 0.0) /
                   (static_cast<double>(n_req) * m);
    res.impressions = std::move(impressions);
    run.models.push_back(std::move(res));
  }
  return run;
}

void write_eval_outputs(const std::string& out_dir, const EvalRun& run,
                        const ExperimentConfig& cfg) {
  ensure_dir(out_dir);
  {
    auto out = open_out(join_path(out_dir, "consistency.csv"));
    out << "method,metric,k,value\n";
    for (const auto& model : run.models) {
      const auto& c = model.consistency;
      for (std::size_t ki = 0; ki < c.ks.size(); ++ki) {
        out << model.name << ",hr," << c.ks[ki] << ',' << format_double(c.hr[ki]) << '\n';
        out << model.name << ",ndcg," << c.ks[ki] << ',' << format_double(c.ndcg[ki]) << '\n';
        out << model.name << ",map," << c.ks[ki] << ',' << format_double(c.map[ki]) << '\n';
      }
    }
  }
  {
    auto out = open_out(join_path(out_dir, "system.csv"));
    out << "method,displays,clicks,ctr,rpm\n";
    for (const auto& model : run.models) {
      out << model.name << ',' << model.displays << ',' << model.clicks << ','
          << format_double(model.ctr) << ',' << format_double(model.rpm) << '\n';
    }
  }
  {
    auto out = open_out(join_path(out_dir, "rpc.csv"));
    out << "method,variant,ranking_position,mean_preranking_position\n";
    for (const auto& model : run.models) {
      for (std::size_t r = 0; r < model.rpc_pctr.mean_pre_pos.size(); ++r) {
        out << model.name << ",pctr," << (r + 1) << ','
            << format_double(model.rpc_pctr.mean_pre_pos[r]) << '\n';
      }
      for (std::size_t r = 0; r < model.rpc_ecpm.mean_pre_pos.size(); ++r) {
        out << model.name << ",ecpm," << (r + 1) << ','
            << format_double(model.rpc_ecpm.mean_pre_pos[r]) << '\n';
      }
    }
  }
  {
    auto out = open_out(join_path(out_dir, "alignment.csv"));
    out << "method,pctr_mae,teacher_pctr_mean,rpc_pctr_mae,rpc_ecpm_mae\n";
    for (const auto& model : run.models) {
      out << model.name << ',' << format_double(model.pctr_mae) << ','
          << format_double(run.teacher_pctr_mean) << ','
          << format_double(rpc_identity_mae(model.rpc_pctr)) << ','
          << format_double(rpc_identity_mae(model.rpc_ecpm)) << '\n';
    }
  }
  for (const auto& model : run.models) {
    write_impression_logs(join_path(out_dir, "impressions_" + model.name + ".csv"),
                          model.impressions);
  }
  (void)cfg;
}

ReportSummary build_report(std::span<const std::string> eval_dirs) {
  if (eval_dirs.empty()) throw std::invalid_argument("build_report: no evaluation directories");
  ReportSummary summary;
  std::unordered_map<std::string, std::size_t> index;
  auto slot = [&](const std::string& method) -> MethodSummary& {
    const auto it = index.find(method);
    if (it != index.end()) return summary.methods[it->second];
    index[method] = summary.methods.size();
    summary.methods.push_back(MethodSummary{method, {}, {}, {}, {}, {}, 0, 0, 0, 0, 0});
    return summary.methods.back();
  };

  for (const auto& dir : eval_dirs) {
    {
      const std::string text = read_file(join_path(dir, "consistency.csv"));
      bool first = true;
      for (const auto& line : split(text, '\n')) {
        if (trim(line).empty()) continue;
        if (first) {
          first = false;
          continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 4) throw std::runtime_error(dir + "/consistency.csv: malformed row");
        if (parse_int(f[2]) != 10) continue;
        auto& s = slot(f[0]);
        const double v = parse_double(f[3]);
        if (f[1] == "hr") s.hr10.push_back(v);
        if (f[1] == "ndcg") s.ndcg10.push_back(v);
        if (f[1] == "map") s.map10.push_back(v);
      }
    }
    {
      const std::string text = read_file(join_path(dir, "system.csv"));
      bool first = true;
      for (const auto& line : split(text, '\n')) {
        if (trim(line).empty()) continue;
        if (first) {
          first = false;
          continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 5) throw std::runtime_error(dir + "/system.csv: malformed row");
        auto& s = slot(f[0]);
        s.ctr.push_back(parse_double(f[3]));
        s.rpm.push_back(parse_double(f[4]));
      }
    }
  }

  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) /
                                 static_cast<double>(v.size());
  };
  for (auto& s : summary.methods) {
    s.mean_hr10 = mean(s.hr10);
    s.mean_ndcg10 = mean(s.ndcg10);
    s.mean_map10 = mean(s.map10);
    s.mean_ctr = mean(s.ctr);
    s.mean_rpm = mean(s.rpm);
  }
  if (summary.methods.size() >= 2) {
    std::vector<double> hr, rpm;
    for (const auto& s : summary.methods) {
      hr.push_back(s.mean_hr10);
      rpm.push_back(s.mean_rpm);
    }
    summary.spearman_hr10_rpm = spearman(hr, rpm);
  }
  return summary;
}

void write_report_csv(const std::string& path, const ReportSummary& summary) {
  auto out = open_out(path);
  out << "method,runs,hr10_mean,ndcg10_mean,map10_mean,ctr_mean,rpm_mean\n";
  for (const auto& s : summary.methods) {
    out << s.method << ',' << s.hr10.size() << ',' << format_double(s.mean_hr10) << ','
        << format_double(s.mean_ndcg10) << ',' << format_double(s.mean_map10) << ','
        << format_double(s.mean_ctr) << ',' << format_double(s.mean_rpm) << '\n';
  }
  out << "spearman_hr10_rpm," << format_double(summary.spearman_hr10_rpm) << ",,,,,\n";
}

std::string render_report_table(const ReportSummary& summary) {
  std::ostringstream ss;
  ss << "method            runs   HR@10    NDCG@10  MAP@10   CTR       RPM\n";
  for (const auto& s : summary.methods) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-17s %-6zu %-8.4f %-8.4f %-8.4f %-9.5f %-9.4f\n",
                  s.method.c_str(), s.hr10.size(), s.mean_hr10, s.mean_ndcg10, s.mean_map10,
                  s.mean_ctr, s.mean_rpm);
    ss << line;
  }
  char tail[80];
  std::snprintf(tail, sizeof(tail), "spearman(HR@10, RPM) = %.4f\n", summary.spearman_hr10_rpm);
  ss << tail;
  return ss.str();
}

}  // namespace copr
