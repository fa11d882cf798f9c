// Command-line front end for the pre-ranking laboratory. Drives the whole
// experiment through the C API: gen-world, train-teacher, train-prerank,
// evaluate, report.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copr/c_api.h"

namespace {

struct ConfigHandle {
  copr_config* ptr = nullptr;
  ~ConfigHandle() { copr_config_close(ptr); }
};
struct WorldHandle {
  copr_world* ptr = nullptr;
  ~WorldHandle() { copr_world_close(ptr); }
};
struct ModelHandle {
  copr_model* ptr = nullptr;
  ~ModelHandle() { copr_model_close(ptr); }
};

[[noreturn]] void die(const std::string& context) {
  std::fprintf(stderr, "error: %s: %s\n", context.c_str(), copr_last_error());
  std::exit(1);
}

void check(int rc, const std::string& context) {
  if (rc != COPR_OK) die(context);
}

ConfigHandle load_config(const std::string& path, const std::vector<std::string>& overrides) {
  ConfigHandle cfg;
  check(copr_config_open(path.c_str(), &cfg.ptr), "loading config " + path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      std::exit(1);
    }
    check(copr_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()),
          "applying override " + kv);
  }
  return cfg;
}

WorldHandle open_world(const std::string& path) {
  WorldHandle world;
  check(copr_world_open(path.c_str(), &world.ptr), "loading world " + path);
  return world;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascading pre-ranking laboratory: synthetic ad world, consistency-oriented "
               "student training, and cascade evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "experiment config file")->required();
  app.add_option("--set", overrides, "override a config key (key=value), repeatable");

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "generate the synthetic world and save it");
  std::string world_out = "world.cat";
  gen->add_option("-o,--out", world_out, "output catalog file");

  // train-teacher
  auto* teach = app.add_subcommand(
      "train-teacher", "bootstrap impressions, train the ranking model, emit ranking logs");
  std::string teach_world, teach_logs = "logs";
  teach->add_option("-w,--world", teach_world, "catalog file")->required();
  teach->add_option("-o,--logs-dir", teach_logs, "output directory for checkpoint and logs");

  // train-prerank
  auto* pre = app.add_subcommand("train-prerank", "train one pre-ranking student");
  std::string pre_world, pre_logs = "logs", pre_out = "students", pre_method;
  pre->add_option("-w,--world", pre_world, "catalog file")->required();
  pre->add_option("-l,--logs-dir", pre_logs, "directory with teacher.ckpt and logs");
  pre->add_option("-o,--out", pre_out, "output directory for the student checkpoint");
  pre->add_option("-m,--method", pre_method,
                  "base | distill | rankflow | copr | copr-wo-dndcg")
      ->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run consistency and funnel evaluation");
  std::string ev_world, ev_logs = "logs", ev_out = "eval";
  std::vector<std::string> ev_students;
  ev->add_option("-w,--world", ev_world, "catalog file")->required();
  ev->add_option("-l,--logs-dir", ev_logs, "directory with teacher.ckpt");
  ev->add_option("-s,--student", ev_students, "student checkpoint file, repeatable");
  ev->add_option("-o,--out", ev_out, "output directory for report CSVs");

  // report
  auto* rep = app.add_subcommand("report", "aggregate evaluate outputs across seeds");
  std::vector<std::string> rep_dirs;
  std::string rep_out = "report.csv";
  rep->add_option("-e,--eval-dir", rep_dirs, "evaluate output directory, repeatable")
      ->required();
  rep->add_option("-o,--out", rep_out, "summary CSV path");

  CLI11_PARSE(app, argc, argv);

  auto cfg = load_config(config_path, overrides);

  if (gen->parsed()) {
    WorldHandle world;
    check(copr_world_generate(cfg.ptr, &world.ptr), "generating world");
    check(copr_world_save(world.ptr, world_out.c_str()), "saving world to " + world_out);
    copr_world_stats stats{};
    check(copr_world_stats_get(world.ptr, &stats), "collecting world stats");
    std::printf("world: %u users, %u ads, mean bid %.4f, mean true CTR %.4f\n", stats.n_users,
                stats.n_ads, stats.mean_bid, stats.mean_true_ctr);
    std::printf("wrote %s (digest %016llx)\n", world_out.c_str(),
                static_cast<unsigned long long>(stats.world_digest));
    return 0;
  }

  if (teach->parsed()) {
    auto world = open_world(teach_world);
    ModelHandle teacher;
    double holdout = 0.0, initial = 0.0;
    check(copr_train_teacher(cfg.ptr, world.ptr, teach_logs.c_str(), &teacher.ptr, &holdout,
                             &initial),
          "training teacher");
    copr_model_stats stats{};
    check(copr_model_stats_get(teacher.ptr, &stats), "reading teacher stats");
    std::printf("teacher: %llu parameters, holdout log-loss %.5f (untrained %.5f)\n",
                static_cast<unsigned long long>(stats.param_count), holdout, initial);
    std::printf("logs written to %s\n", teach_logs.c_str());
    return 0;
  }

  if (pre->parsed()) {
    auto world = open_world(pre_world);
    ModelHandle teacher;
    const std::string teacher_path = pre_logs + "/teacher.ckpt";
    check(copr_model_open(teacher_path.c_str(), world.ptr, &teacher.ptr),
          "loading " + teacher_path);
    ModelHandle student;
    check(copr_train_prerank(cfg.ptr, world.ptr, teacher.ptr, pre_method.c_str(),
                             pre_logs.c_str(), pre_out.c_str(), &student.ptr),
          "training student " + pre_method);
    copr_model_stats stats{};
    check(copr_model_stats_get(student.ptr, &stats), "reading student stats");
    std::printf("student %s: %llu parameters, relaxation net %s\n", pre_method.c_str(),
                static_cast<unsigned long long>(stats.param_count),
                stats.has_relaxation ? "present" : "absent");
    std::printf("checkpoint written to %s/student_%s.ckpt\n", pre_out.c_str(),
                pre_method.c_str());
    return 0;
  }

  if (ev->parsed()) {
    auto world = open_world(ev_world);
    ModelHandle teacher;
    const std::string teacher_path = ev_logs + "/teacher.ckpt";
    check(copr_model_open(teacher_path.c_str(), world.ptr, &teacher.ptr),
          "loading " + teacher_path);

    std::vector<std::unique_ptr<ModelHandle>> students;
    std::vector<const copr_model*> model_ptrs;
    std::vector<std::string> names;
    for (const auto& path : ev_students) {
      auto handle = std::make_unique<ModelHandle>();
      check(copr_model_open(path.c_str(), world.ptr, &handle->ptr), "loading " + path);
      copr_model_stats stats{};
      check(copr_model_stats_get(handle->ptr, &stats), "reading stats of " + path);
      model_ptrs.push_back(handle->ptr);
      names.emplace_back(stats.tag[0] ? stats.tag : path);
      students.push_back(std::move(handle));
    }
    std::vector<const char*> name_ptrs;
    for (const auto& n : names) name_ptrs.push_back(n.c_str());

    check(copr_evaluate(cfg.ptr, world.ptr, teacher.ptr, model_ptrs.data(), name_ptrs.data(),
                        model_ptrs.size(), ev_out.c_str()),
          "evaluating");
    std::printf("evaluation reports written to %s\n", ev_out.c_str());
    return 0;
  }

  if (rep->parsed()) {
    std::vector<const char*> dir_ptrs;
    for (const auto& d : rep_dirs) dir_ptrs.push_back(d.c_str());
    std::string table(4096, '\0');
    check(copr_report(dir_ptrs.data(), dir_ptrs.size(), rep_out.c_str(), table.data(),
                      table.size()),
          "building report");
    std::printf("%s", table.c_str());
    std::printf("summary written to %s\n", rep_out.c_str());
    return 0;
  }

  return 0;
}
