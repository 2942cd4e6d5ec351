/*
 * Copyright 2026 The msngo Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msngo/fixture.hpp"
#include "msngo/pipeline.hpp"

namespace {

using namespace msngo;

struct Common {
  std::string config;
  std::string data_dir;
  std::string work_dir;
  std::string branch;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  bool all_branches = false;
  bool no_struct = false;
  bool no_struct_model = false;
  bool no_propagation = false;
  bool no_label_prop = false;
  bool weighted_logits = false;
  bool resume = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "key = value run configuration file");
  cmd->add_option("--data-dir", c.data_dir, "directory that relative input paths resolve against");
  cmd->add_option("--work-dir", c.work_dir, "directory for intermediate and output files");
  cmd->add_option("-b,--branch", c.branch, "GO branch: BPO, MFO or CCO");
  cmd->add_option("-s,--seed", c.seed, "master seed");
  cmd->add_option("--set", c.overrides, "override a config key (key=value); repeatable");
  cmd->add_flag("--all-branches", c.all_branches, "run BPO, MFO and CCO in turn");
  cmd->add_flag("--no-struct", c.no_struct, "drop structural features");
  cmd->add_flag("--no-struct-model", c.no_struct_model, "use mean residue features instead of the structure model");
  cmd->add_flag("--no-propagation", c.no_propagation, "drop network propagation layers (and label diffusion)");
  cmd->add_flag("--no-label-prop", c.no_label_prop, "report the feature model output only (phi = 1)");
  cmd->add_flag("--weighted-logits", c.weighted_logits, "add log edge weights to attention logits");
  cmd->add_flag("--resume", c.resume, "continue propagation training from its checkpoint");
  cmd->add_flag("-v,--verbose", c.verbose, "log per-epoch progress");
}

// Config file first, then flags.
RunConfig build_config(const CLI::App* cmd, const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (!c.data_dir.empty()) cfg.data_dir = c.data_dir;
  if (!c.work_dir.empty()) cfg.work_dir = c.work_dir;
  if (!c.branch.empty()) set_config_value(cfg, "branch", c.branch);
  if (cmd->count("--seed")) cfg.seed = c.seed;
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, trim(std::string_view(kv).substr(0, eq)), std::string_view(kv).substr(eq + 1));
  }
  cfg.no_struct = cfg.no_struct || c.no_struct;
  cfg.no_struct_model = cfg.no_struct_model || c.no_struct_model;
  cfg.no_propagation = cfg.no_propagation || c.no_propagation;
  cfg.no_label_prop = cfg.no_label_prop || c.no_label_prop;
  cfg.weighted_logits = cfg.weighted_logits || c.weighted_logits;
  cfg.resume = cfg.resume || c.resume;
  cfg.validate();
  return cfg;
}

// Branches to run: the configured one, or every branch with ontology terms.
std::vector<RunConfig> branch_configs(const RunConfig& cfg, bool all) {
  if (!all) return {cfg};
  const GoDag dag = parse_file(cfg.input(cfg.obo), "ontology", [](std::string_view t) { return parse_obo(t); });
  std::vector<RunConfig> out;
  for (Namespace ns : {Namespace::BPO, Namespace::MFO, Namespace::CCO}) {
    if (branch_filter(dag, ns).empty()) {
      log::warn("ontology has no " + std::string(to_string(ns)) + " terms; branch skipped");
      continue;
    }
    RunConfig b = cfg;
    b.branch = ns;
    out.push_back(b);
  }
  return out;
}

void print_metrics(const std::vector<MetricRow>& rows) {
  for (const auto& r : rows) std::cout << r.metric << '\t' << r.branch << '\t' << format_double(r.value) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-species protein function prediction from sequence, structure and networks"};
  app.require_subcommand(1);

  FixtureConfig fx;
  std::string fixture_out = "fixture";
  auto* fixture = app.add_subcommand("fixture", "write a synthetic dataset bundle");
  fixture->add_option("-o,--out", fixture_out, "output directory");
  fixture->add_option("-s,--seed", fx.seed, "generator seed");
  fixture->add_option("--species", fx.species, "number of species");
  fixture->add_option("--proteins", fx.proteins_per_species, "proteins per species");
  fixture->add_option("--labels", fx.labels, "number of GO terms");

  Common common;
  struct Stage {
    const char* name;
    const char* help;
  };
  const std::vector<Stage> stages = {
      {"contact", "build residue contact graphs from coordinates"},
      {"embed", "node2vec + one-hot residue features per contact graph"},
      {"train-struct", "train the structure model"},
      {"extract", "write structural feature table from the trained structure model"},
      {"train-prop", "train the network propagation model"},
      {"predict", "predict GO terms for test proteins"},
      {"eval", "score predictions against held-out labels"},
      {"run", "all stages in order"},
  };
  std::vector<CLI::App*> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, common);
    stage_cmds.push_back(cmd);
  }

  CLI11_PARSE(app, argc, argv);

  log::set_warning_sink([](std::string_view m) { std::cerr << "warning: " << m << '\n'; });
  try {
    if (fixture->parsed()) {
      const auto bundle = synth_fixture(fx);
      write_fixture(bundle, fixture_out);
      std::cout << "wrote " << bundle.proteins.size() << " proteins to " << fixture_out << '\n';
      return 0;
    }
    for (auto* cmd : stage_cmds) {
      if (!cmd->parsed()) continue;
      log::set_info_enabled(common.verbose);
      const RunConfig base = build_config(cmd, common);
      const std::string name = cmd->get_name();
      for (const auto& cfg : branch_configs(base, common.all_branches)) {
        if (name == "contact") {
          const auto s = cmd_contact(cfg);
          std::cout << "contact graphs: " << s.written << ", without structure: " << s.missing.size() << '\n';
        } else if (name == "embed") {
          std::cout << "embedded " << cmd_embed(cfg) << " proteins\n";
        } else if (name == "train-struct") {
          const auto r = cmd_train_struct(cfg);
          std::cout << "structure model trained, final epoch loss "
                    << (r.epoch_loss.empty() ? std::string("n/a") : format_double(r.epoch_loss.back())) << '\n';
        } else if (name == "extract") {
          const auto t = cmd_extract(cfg);
          std::cout << "structural features: " << t.size() << " x " << t.dim() << '\n';
        } else if (name == "train-prop") {
          const auto st = cmd_train_prop(cfg);
          std::cout << "propagation model trained for " << st.epochs_done << " epochs, final loss "
                    << (st.log.empty() ? std::string("n/a") : format_double(st.log.back().loss)) << '\n';
        } else if (name == "predict") {
          cmd_predict(cfg);
          std::cout << "predictions written to " << predictions_path(cfg).string() << '\n';
        } else if (name == "eval") {
          print_metrics(cmd_eval(cfg));
        } else if (name == "run") {
          print_metrics(run_all(cfg));
        }
      }
    }
  } catch (const msngo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
