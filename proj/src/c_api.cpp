#include "copr/c_api.h"

#include <cstring>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "copr/catalog.hpp"
#include "copr/config.hpp"
#include "copr/model.hpp"
#include "copr/pipeline.hpp"
#include "copr/text.hpp"

namespace {

thread_local std::string g_last_error = "ok";

int fail(int code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const copr::ConfigError& e) {
    return fail(COPR_E_CONFIG, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(COPR_E_INVALID, e.what());
  } catch (const std::out_of_range& e) {
    return fail(COPR_E_INVALID, e.what());
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    if (what.find("digest mismatch") != std::string::npos) return fail(COPR_E_DIGEST, what);
    return fail(COPR_E_IO, what);
  } catch (const std::exception& e) {
    return fail(COPR_E_INTERNAL, e.what());
  }
}

int require(bool ok, const char* what) {
  return ok ? COPR_OK : fail(COPR_E_INVALID, std::string("null argument: ") + what);
}

}  // namespace

struct copr_config {
  copr::Config cfg;
};

struct copr_world {
  copr::Catalog catalog;
};

struct copr_model {
  copr::CtrModel model;
  std::string tag;
  std::uint64_t world_digest = 0;
};

extern "C" {

const char* copr_version(void) { return "0.1.0"; }

const char* copr_last_error(void) { return g_last_error.c_str(); }

int copr_config_create(copr_config** out) {
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    *out = new copr_config{copr::Config{}};
    return COPR_OK;
  });
}

int copr_config_open(const char* path, copr_config** out) {
  if (int rc = require(path, "path")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    *out = new copr_config{copr::Config::from_file(path)};
    return COPR_OK;
  });
}

int copr_config_set(copr_config* cfg, const char* key, const char* value) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(key, "key")) return rc;
  if (int rc = require(value, "value")) return rc;
  return guarded([&] {
    cfg->cfg.set(key, value);
    return COPR_OK;
  });
}

int copr_config_get(const copr_config* cfg, const char* key, char* buf, size_t buf_size) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(key, "key")) return rc;
  if (int rc = require(buf, "buf")) return rc;
  return guarded([&] {
    const std::string value = cfg->cfg.get_str(key);
    if (value.size() + 1 > buf_size) {
      return fail(COPR_E_INVALID, "buffer too small for config value");
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
    return COPR_OK;
  });
}

void copr_config_close(copr_config* cfg) { delete cfg; }

int copr_world_generate(const copr_config* cfg, copr_world** out) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    const auto world_cfg = copr::WorldConfig::from_config(cfg->cfg);
    *out = new copr_world{copr::Catalog::generate(world_cfg)};
    return COPR_OK;
  });
}

int copr_world_save(const copr_world* world, const char* path) {
  if (int rc = require(world, "world")) return rc;
  if (int rc = require(path, "path")) return rc;
  return guarded([&] {
    world->catalog.save(path);
    return COPR_OK;
  });
}

int copr_world_open(const char* path, copr_world** out) {
  if (int rc = require(path, "path")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    *out = new copr_world{copr::Catalog::load(path)};
    return COPR_OK;
  });
}

int copr_world_stats_get(const copr_world* world, copr_world_stats* out) {
  if (int rc = require(world, "world")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    out->n_users = world->catalog.n_users();
    out->n_ads = world->catalog.n_ads();
    out->mean_bid = world->catalog.mean_bid();
    out->mean_true_ctr = world->catalog.estimate_base_rate(10000, 0x57a7);
    out->world_digest = world->catalog.world_digest();
    return COPR_OK;
  });
}

void copr_world_close(copr_world* world) { delete world; }

int copr_model_open(const char* path, const copr_world* world, copr_model** out) {
  if (int rc = require(path, "path")) return rc;
  if (int rc = require(world, "world")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    std::string tag;
    auto model = copr::CtrModel::load(path, world->catalog.world_digest(), &tag);
    *out = new copr_model{std::move(model), std::move(tag), world->catalog.world_digest()};
    return COPR_OK;
  });
}

int copr_model_save(const copr_model* model, const char* path) {
  if (int rc = require(model, "model")) return rc;
  if (int rc = require(path, "path")) return rc;
  return guarded([&] {
    model->model.save(path, model->world_digest, model->tag);
    return COPR_OK;
  });
}

int copr_model_stats_get(const copr_model* model, copr_model_stats* out) {
  if (int rc = require(model, "model")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    out->param_count = model->model.param_count();
    out->has_relaxation = model->model.has_relaxation() ? 1 : 0;
    std::snprintf(out->tag, sizeof(out->tag), "%s", model->tag.c_str());
    return COPR_OK;
  });
}

void copr_model_close(copr_model* model) { delete model; }

int copr_train_teacher(const copr_config* cfg, const copr_world* world, const char* logs_dir,
                       copr_model** out_model, double* holdout_logloss,
                       double* initial_holdout_logloss) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(world, "world")) return rc;
  if (int rc = require(logs_dir, "logs_dir")) return rc;
  if (int rc = require(out_model, "out_model")) return rc;
  return guarded([&] {
    const auto exp = copr::ExperimentConfig::from_config(cfg->cfg);
    auto artifacts = copr::train_teacher_pipeline(exp, world->catalog, logs_dir);
    if (holdout_logloss) *holdout_logloss = artifacts.holdout_log_loss;
    if (initial_holdout_logloss) *initial_holdout_logloss = artifacts.initial_holdout_log_loss;
    *out_model = new copr_model{std::move(artifacts.model), "teacher", world->catalog.world_digest()};
    return COPR_OK;
  });
}

int copr_train_prerank(const copr_config* cfg, const copr_world* world,
                       const copr_model* teacher, const char* method, const char* logs_dir,
                       const char* out_dir, copr_model** out_model) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(world, "world")) return rc;
  if (int rc = require(teacher, "teacher")) return rc;
  if (int rc = require(method, "method")) return rc;
  if (int rc = require(logs_dir, "logs_dir")) return rc;
  if (int rc = require(out_dir, "out_dir")) return rc;
  if (int rc = require(out_model, "out_model")) return rc;
  return guarded([&] {
    const auto exp = copr::ExperimentConfig::from_config(cfg->cfg);
    auto model = copr::train_prerank_pipeline(exp, world->catalog, teacher->model, method,
                                              logs_dir, out_dir);
    *out_model = new copr_model{std::move(model), method, world->catalog.world_digest()};
    return COPR_OK;
  });
}

int copr_evaluate(const copr_config* cfg, const copr_world* world, const copr_model* teacher,
                  const copr_model* const* models, const char* const* names, size_t n_models,
                  const char* out_dir) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(world, "world")) return rc;
  if (int rc = require(teacher, "teacher")) return rc;
  if (int rc = require(out_dir, "out_dir")) return rc;
  if (n_models > 0) {
    if (int rc = require(models, "models")) return rc;
    if (int rc = require(names, "names")) return rc;
  }
  return guarded([&] {
    const auto exp = copr::ExperimentConfig::from_config(cfg->cfg);
    std::vector<std::pair<std::string, const copr::CtrModel*>> list;
    list.reserve(n_models);
    for (size_t i = 0; i < n_models; ++i) {
      if (!models[i] || !names[i]) return fail(COPR_E_INVALID, "null model or name entry");
      list.emplace_back(names[i], &models[i]->model);
    }
    const auto run = copr::evaluate_models(exp, world->catalog, teacher->model, list);
    copr::write_eval_outputs(out_dir, run, exp);
    return COPR_OK;
  });
}

int copr_report(const char* const* eval_dirs, size_t n_dirs, const char* out_csv_path,
                char* table_buf, size_t table_buf_size) {
  if (int rc = require(eval_dirs, "eval_dirs")) return rc;
  if (int rc = require(out_csv_path, "out_csv_path")) return rc;
  if (n_dirs == 0) return fail(COPR_E_INVALID, "copr_report: no evaluation directories");
  return guarded([&] {
    std::vector<std::string> dirs;
    dirs.reserve(n_dirs);
    for (size_t i = 0; i < n_dirs; ++i) {
      if (!eval_dirs[i]) return fail(COPR_E_INVALID, "null evaluation directory entry");
      dirs.emplace_back(eval_dirs[i]);
    }
    const auto summary = copr::build_report(dirs);
    copr::write_report_csv(out_csv_path, summary);
    if (table_buf && table_buf_size > 0) {
      const std::string table = copr::render_report_table(summary);
      std::snprintf(table_buf, table_buf_size, "%s", table.c_str());
    }
    return COPR_OK;
  });
}

}  // extern "C"
