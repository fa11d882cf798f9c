#include "copr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "copr/text.hpp"

namespace copr {

namespace {

// Shard count for deterministic parallel reduction. Depends only on the
// record count, never on the thread count, so the floating-point summation
// order is fixed.
std::size_t shard_count(std::size_t n) {
  return std::clamp<std::size_t>(n / 32, 1, 8);
}

/*! Stable binary cross entropy against a (possibly soft) label. */
double bce_from_logit(double logit, double label) {
  // -label*log(sigmoid) - (1-label)*log(1-sigmoid)
  return std::max(logit, 0.0) - label * logit + std::log1p(std::exp(-std::abs(logit)));
}

struct Scratch {
  std::vector<double> x;
  std::vector<double> dx;
  MlpCache pred_cache;
  MlpCache relax_cache;
};

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "base") return Method::kBase;
  if (name == "distill") return Method::kDistill;
  if (name == "rankflow") return Method::kRankflow;
  if (name == "copr") return Method::kCopr;
  throw std::invalid_argument("unknown training method '" + name +
                              "' (expected base|distill|rankflow|copr)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kBase: return "base";
    case Method::kDistill: return "distill";
    case Method::kRankflow: return "rankflow";
    case Method::kCopr: return "copr";
  }
  return "?";
}

TrainData build_train_data(const Catalog& catalog, std::span<const RequestInfo> requests,
                           std::span<const RankedList> ranking_logs,
                           std::span<const ImpressionLog> impressions) {
  std::unordered_map<std::uint32_t, const RequestInfo*> by_id;
  by_id.reserve(requests.size());
  for (const auto& r : requests) by_id[r.request_id] = &r;
  auto lookup = [&](std::uint32_t request_id) -> const RequestInfo& {
    const auto it = by_id.find(request_id);
    if (it == by_id.end()) {
      throw std::runtime_error("log references unknown request " + std::to_string(request_id));
    }
    return *it->second;
  };

  TrainData data;
  data.ctr_records.reserve(impressions.size());
  for (const auto& log : impressions) {
    const auto& req = lookup(log.request_id);
    for (const auto& imp : log.entries) {
      CtrRecord rec;
      rec.feats = catalog.features(req.user, imp.ad_id, req.context);
      rec.y = imp.y ? 1.0 : 0.0;
      data.ctr_records.push_back(rec);
    }
  }
  data.ranking_logs.reserve(ranking_logs.size());
  for (const auto& log : ranking_logs) {
    const auto& req = lookup(log.request_id);
    TrainData::Log out;
    out.request_id = log.request_id;
    out.entries.reserve(log.entries.size());
    for (const auto& e : log.entries) {
      TrainData::LogEntry entry;
      entry.ad_id = e.ad_id;
      entry.feats = catalog.features(req.user, e.ad_id, req.context);
      entry.pctr = e.pctr;
      entry.bid = e.bid;
      out.entries.push_back(entry);
    }
    data.ranking_logs.push_back(std::move(out));
  }
  return data;
}

void attach_teacher_scores(TrainData& data, const CtrModel& teacher) {
  std::vector<double> x(teacher.input_dim());
  for (auto& rec : data.ctr_records) {
    teacher.embed_concat(rec.feats, x);
    rec.teacher_pctr = teacher.forward_pctr(x);
  }
}

double mean_log_loss(const CtrModel& model, std::span<const CtrRecord> records) {
  if (records.empty()) throw std::invalid_argument("mean_log_loss: empty record set");
  double sum = 0.0;
  std::vector<double> x(model.input_dim());
  MlpCache cache;
  for (const auto& rec : records) {
    model.embed_concat(rec.feats, x);
    model.forward_pctr(x, &cache);
    sum += bce_from_logit(cache.out, rec.y);
  }
  return sum / static_cast<double>(records.size());
}

double ctr_loss_grad(const CtrModel& model, std::span<const CtrRecord> records,
                     std::span<double> grad, double weight) {
  const std::size_t n = records.size();
  if (n == 0) return 0.0;
  const std::size_t shards = shard_count(n);
  std::vector<std::vector<double>> shard_grad(shards);
  std::vector<double> shard_loss(shards, 0.0);
  const double scale = weight / static_cast<double>(n);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t s = 0; s < shards; ++s) {
    auto& g = shard_grad[s];
    g.assign(model.param_count(), 0.0);
    Scratch ws;
    ws.x.resize(model.input_dim());
    ws.dx.resize(model.input_dim());
    const std::size_t lo = n * s / shards, hi = n * (s + 1) / shards;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& rec = records[i];
      model.embed_concat(rec.feats, ws.x);
      const double y_hat = model.forward_pctr(ws.x, &ws.pred_cache);
      shard_loss[s] += bce_from_logit(ws.pred_cache.out, rec.y);
      std::fill(ws.dx.begin(), ws.dx.end(), 0.0);
      model.backward_pred(ws.pred_cache, scale * (y_hat - rec.y), g, ws.dx);
      model.scatter_embed_grad(rec.feats, ws.dx, g);
    }
  }

  double loss = 0.0;
  for (std::size_t s = 0; s < shards; ++s) {
    loss += shard_loss[s];
    const auto& g = shard_grad[s];
    for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
  }
  return loss / static_cast<double>(n);
}

double distill_loss_grad(const CtrModel& model, std::span<const CtrRecord> records,
                         std::span<double> grad, double weight) {
  const std::size_t n = records.size();
  if (n == 0) return 0.0;
  for (const auto& rec : records) {
    if (rec.teacher_pctr < 0.0) {
      throw std::invalid_argument("distill_loss_grad: record without a teacher score");
    }
  }
  const std::size_t shards = shard_count(n);
  std::vector<std::vector<double>> shard_grad(shards);
  std::vector<double> shard_loss(shards, 0.0);
  const double scale = weight / static_cast<double>(n);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t s = 0; s < shards; ++s) {
    auto& g = shard_grad[s];
    g.assign(model.param_count(), 0.0);
    Scratch ws;
    ws.x.resize(model.input_dim());
    ws.dx.resize(model.input_dim());
    const std::size_t lo = n * s / shards, hi = n * (s + 1) / shards;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& rec = records[i];
      model.embed_concat(rec.feats, ws.x);
      const double y_hat = model.forward_pctr(ws.x, &ws.pred_cache);
      shard_loss[s] += bce_from_logit(ws.pred_cache.out, rec.teacher_pctr);
      std::fill(ws.dx.begin(), ws.dx.end(), 0.0);
      model.backward_pred(ws.pred_cache, scale * (y_hat - rec.teacher_pctr), g, ws.dx);
      model.scatter_embed_grad(rec.feats, ws.dx, g);
    }
  }

  double loss = 0.0;
  for (std::size_t s = 0; s < shards; ++s) {
    loss += shard_loss[s];
    const auto& g = shard_grad[s];
    for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
  }
  return loss / static_cast<double>(n);
}

RankRegLoss rank_reg_loss_grad(const CtrModel& model, std::span<const ChunkGroup> groups,
                               PairForm form, bool dndcg_weights, double lambda1, double lambda2,
                               std::span<double> grad) {
  if (groups.empty()) return {};
  std::size_t n_pairs = 0, n_reps = 0;
  for (const auto& g : groups) {
    const std::size_t d = g.reps.size();
    n_pairs += d * (d - 1) / 2;
    n_reps += d;
  }
  const double pair_norm = n_pairs ? 1.0 / static_cast<double>(n_pairs) : 0.0;
  const double rep_norm = n_reps ? 1.0 / static_cast<double>(n_reps) : 0.0;

  const std::size_t shards = shard_count(groups.size());
  std::vector<std::vector<double>> shard_grad(shards);
  std::vector<double> shard_rank(shards, 0.0), shard_reg(shards, 0.0);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t s = 0; s < shards; ++s) {
    auto& g = shard_grad[s];
    g.assign(model.param_count(), 0.0);
    std::vector<double> x(model.input_dim());
    std::vector<double> dx(model.input_dim());
    std::vector<MlpCache> pred_caches, relax_caches;
    std::vector<double> y_hat, alpha, y_adj, d_adj, d_alpha_reg;
    const std::size_t lo = groups.size() * s / shards, hi = groups.size() * (s + 1) / shards;
    for (std::size_t gi = lo; gi < hi; ++gi) {
      const auto& group = groups[gi];
      const std::size_t d = group.reps.size();
      if (d == 0) continue;
      if (pred_caches.size() < d) {
        pred_caches.resize(d);
        relax_caches.resize(d);
      }
      y_hat.assign(d, 0.0);
      alpha.assign(d, 1.0);
      y_adj.assign(d, 0.0);
      d_adj.assign(d, 0.0);
      d_alpha_reg.assign(d, 0.0);

      // One forward per representative; its adjusted score feeds every pair.
      for (std::size_t r = 0; r < d; ++r) {
        model.embed_concat(group.reps[r].feats, x);
        y_hat[r] = model.forward_pctr(x, &pred_caches[r]);
        if (model.has_relaxation()) {
          alpha[r] = model.forward_alpha(x, &relax_caches[r]);
          double dpen = 0.0;
          shard_reg[s] += relaxation_penalty(alpha[r], &dpen);
          d_alpha_reg[r] = dpen;
        }
        y_adj[r] = CtrModel::adjusted_pctr(y_hat[r], alpha[r]);
      }

      const int dd = static_cast<int>(d);
      for (int i = 0; i < dd; ++i) {
        for (int j = i + 1; j < dd; ++j) {
          const double w =
              dndcg_weights && dd >= 2 ? delta_ndcg(i + 1, j + 1, dd) : 1.0;
          double dyi = 0.0, dyj = 0.0;
          const double loss = pair_logistic_loss(y_adj[i], group.reps[i].bid, y_adj[j],
                                                 group.reps[j].bid, form, &dyi, &dyj);
          shard_rank[s] += w * loss;
          d_adj[i] += w * dyi;
          d_adj[j] += w * dyj;
        }
      }

      for (std::size_t r = 0; r < d; ++r) {
        const double d_yadj = lambda1 * pair_norm * d_adj[r];
        const double dlogit = d_yadj * alpha[r] * y_hat[r] * (1.0 - y_hat[r]);
        std::fill(dx.begin(), dx.end(), 0.0);
        model.backward_pred(pred_caches[r], dlogit, g, dx);
        if (model.has_relaxation()) {
          const double dalpha = d_yadj * y_hat[r] + lambda2 * rep_norm * d_alpha_reg[r];
          model.backward_relax(relax_caches[r], dalpha, g, dx);
        }
        model.scatter_embed_grad(group.reps[r].feats, dx, g);
      }
    }
  }

  RankRegLoss out;
  for (std::size_t s = 0; s < shards; ++s) {
    out.l_rank += shard_rank[s];
    out.l_reg += shard_reg[s];
    const auto& g = shard_grad[s];
    for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
  }
  out.l_rank *= pair_norm;
  out.l_reg *= rep_norm;
  return out;
}

RankflowTerms rankflow_loss_grad(const CtrModel& model,
                                 std::span<const TrainData::LogEntry> entries,
                                 std::span<const std::uint8_t> selected, double w_score,
                                 double w_select, std::span<double> grad) {
  const std::size_t n = entries.size();
  if (n == 0) return {};
  if (selected.size() != n) {
    throw std::invalid_argument("rankflow_loss_grad: selected mask size mismatch");
  }
  std::size_t n_sel = 0;
  for (const auto s : selected) n_sel += s ? 1 : 0;
  const double score_norm = 1.0 / static_cast<double>(n);
  const double sel_norm = n_sel ? 1.0 / static_cast<double>(n_sel) : 0.0;

  const std::size_t shards = shard_count(n);
  std::vector<std::vector<double>> shard_grad(shards);
  std::vector<double> shard_mse(shards, 0.0), shard_bce(shards, 0.0);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t s = 0; s < shards; ++s) {
    auto& g = shard_grad[s];
    g.assign(model.param_count(), 0.0);
    Scratch ws;
    ws.x.resize(model.input_dim());
    ws.dx.resize(model.input_dim());
    const std::size_t lo = n * s / shards, hi = n * (s + 1) / shards;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& e = entries[i];
      model.embed_concat(e.feats, ws.x);
      const double y_hat = model.forward_pctr(ws.x, &ws.pred_cache);
      const double sig_grad = y_hat * (1.0 - y_hat);
      const double diff = y_hat - e.pctr;
      shard_mse[s] += diff * diff;
      double dlogit = w_score * score_norm * 2.0 * diff * sig_grad;
      if (selected[i]) {
        // push the score towards 1 on candidates the ranking model selected
        shard_bce[s] += bce_from_logit(ws.pred_cache.out, 1.0);
        dlogit += w_select * sel_norm * (y_hat - 1.0);
      }
      std::fill(ws.dx.begin(), ws.dx.end(), 0.0);
      model.backward_pred(ws.pred_cache, dlogit, g, ws.dx);
      model.scatter_embed_grad(e.feats, ws.dx, g);
    }
  }

  RankflowTerms out;
  for (std::size_t s = 0; s < shards; ++s) {
    out.score_mse += shard_mse[s];
    out.select_bce += shard_bce[s];
    const auto& g = shard_grad[s];
    for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
  }
  out.score_mse *= score_norm;
  out.select_bce *= sel_norm;
  return out;
}

TrainResult train(const ModelSpec& student_spec, const TrainData& data, const TrainConfig& cfg) {
  const bool needs_logs = cfg.method == Method::kCopr || cfg.method == Method::kRankflow;
  if (data.ctr_records.empty()) {
    throw std::invalid_argument("train: no impression records for the CTR loss");
  }
  if (needs_logs && data.ranking_logs.empty()) {
    throw std::invalid_argument("train: method '" + method_name(cfg.method) +
                                "' requires ranking logs");
  }
  if (cfg.method == Method::kDistill) {
    for (const auto& rec : data.ctr_records) {
      if (rec.teacher_pctr < 0.0) {
        throw std::invalid_argument("train: distillation requires teacher scores on impressions");
      }
    }
  }
  if (cfg.ctr_batch == 0 || cfg.pair_batch == 0) {
    throw std::invalid_argument("train: batch sizes must be positive");
  }

  TrainResult result{CtrModel(student_spec), {}};
  Rng init_rng = Rng::stream(cfg.seed, 0xA110);
  result.model.init_params(init_rng);
  if (cfg.epochs == 0) return result;

  CtrModel& model = result.model;
  std::vector<double> grad(model.param_count(), 0.0);

  const std::size_t n_ctr = data.ctr_records.size();
  const std::size_t n_logs = data.ranking_logs.size();
  std::vector<std::uint32_t> ctr_order(n_ctr), log_order(n_logs);

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = Rng::stream(cfg.seed, 0xE000 + 2ull * epoch);
    Rng chunk_rng = Rng::stream(cfg.seed, 0xE001 + 2ull * epoch);
    for (std::uint32_t i = 0; i < n_ctr; ++i) ctr_order[i] = i;
    shuffle_rng.shuffle(ctr_order);
    if (needs_logs) {
      for (std::uint32_t i = 0; i < n_logs; ++i) log_order[i] = i;
      shuffle_rng.shuffle(log_order);
    }

    // One epoch sweeps the method's primary stream once; the other stream
    // cycles with an independent cursor.
    const std::size_t primary_n = needs_logs ? n_logs : n_ctr;
    const std::size_t primary_batch = needs_logs ? cfg.pair_batch : cfg.ctr_batch;
    const std::size_t steps = (primary_n + primary_batch - 1) / primary_batch;
    std::size_t ctr_cursor = 0, log_cursor = 0;

    LossReport epoch_report;
    epoch_report.lambda1 = cfg.lambda1;
    epoch_report.lambda2 = cfg.lambda2;

    std::vector<CtrRecord> ctr_slice;
    std::vector<ChunkGroup> groups;
    std::vector<TrainData::LogEntry> rf_entries;
    std::vector<std::uint8_t> rf_selected;

    for (std::size_t step = 0; step < steps; ++step) {
      std::fill(grad.begin(), grad.end(), 0.0);

      ctr_slice.clear();
      for (std::size_t i = 0; i < cfg.ctr_batch && n_ctr > 0; ++i) {
        ctr_slice.push_back(data.ctr_records[ctr_order[ctr_cursor]]);
        ctr_cursor = (ctr_cursor + 1) % n_ctr;
      }
      const double l_ctr = ctr_loss_grad(model, ctr_slice, grad);

      double l_rank = 0.0, l_reg = 0.0;
      double report_lambda1 = cfg.lambda1;
      switch (cfg.method) {
        case Method::kBase:
          report_lambda1 = 0.0;
          break;
        case Method::kDistill: {
          l_rank = distill_loss_grad(model, ctr_slice, grad, cfg.distill_weight);
          report_lambda1 = cfg.distill_weight;
          break;
        }
        case Method::kRankflow: {
          rf_entries.clear();
          rf_selected.clear();
          for (std::size_t b = 0; b < cfg.pair_batch && step * cfg.pair_batch + b < n_logs; ++b) {
            const auto& log = data.ranking_logs[log_order[log_cursor]];
            log_cursor = (log_cursor + 1) % n_logs;
            for (std::size_t pos = 0; pos < log.entries.size(); ++pos) {
              rf_entries.push_back(log.entries[pos]);
              rf_selected.push_back(pos < cfg.rankflow_select_top ? 1 : 0);
            }
          }
          const auto terms = rankflow_loss_grad(model, rf_entries, rf_selected,
                                                cfg.rankflow_score_weight,
                                                cfg.rankflow_select_weight, grad);
          l_rank = cfg.rankflow_score_weight * terms.score_mse +
                   cfg.rankflow_select_weight * terms.select_bce;
          report_lambda1 = 1.0;
          break;
        }
        case Method::kCopr: {
          groups.clear();
          for (std::size_t b = 0; b < cfg.pair_batch && step * cfg.pair_batch + b < n_logs; ++b) {
            const auto& log = data.ranking_logs[log_order[log_cursor]];
            log_cursor = (log_cursor + 1) % n_logs;
            const auto m = static_cast<std::uint32_t>(log.entries.size());
            const auto picks = chunk_rep_indices(m, cfg.chunk_k, chunk_rng);
            ChunkGroup group;
            group.reps.reserve(picks.size());
            const auto n_chunks = static_cast<std::uint32_t>(picks.size());
            for (std::uint32_t d = 0; d < n_chunks; ++d) {
              const auto& e = log.entries[picks[d]];
              group.reps.push_back({e.feats, e.bid, n_chunks - 1 - d});
            }
            groups.push_back(std::move(group));
          }
          const auto rr = rank_reg_loss_grad(model, groups, cfg.form, cfg.dndcg_weights,
                                             cfg.lambda1, cfg.lambda2, grad);
          l_rank = rr.l_rank;
          l_reg = rr.l_reg;
          break;
        }
      }

      model.sgd_step(grad, cfg.lr);

      epoch_report.l_ctr += l_ctr;
      epoch_report.l_rank += l_rank;
      epoch_report.l_reg += l_reg;
      epoch_report.lambda1 = report_lambda1;
      epoch_report.lambda2 = cfg.method == Method::kCopr ? cfg.lambda2 : 0.0;
    }

    const auto inv_steps = 1.0 / static_cast<double>(steps);
    epoch_report.l_ctr *= inv_steps;
    epoch_report.l_rank *= inv_steps;
    epoch_report.l_reg *= inv_steps;
    epoch_report.total = epoch_report.l_ctr + epoch_report.lambda1 * epoch_report.l_rank +
                         epoch_report.lambda2 * epoch_report.l_reg;
    result.curve.push_back(epoch_report);
  }
  return result;
}

void write_training_curve(const std::string& path, std::span<const LossReport> curve) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "epoch,l_ctr,l_rank,l_reg,total\n";
  for (std::size_t e = 0; e < curve.size(); ++e) {
    out << (e + 1) << ',' << format_double(curve[e].l_ctr) << ',' << format_double(curve[e].l_rank)
        << ',' << format_double(curve[e].l_reg) << ',' << format_double(curve[e].total) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace copr
