// nifsim — scenario generation, interference-graph statistics, single-shot
// scheduling and multi-period joint scheduling + power allocation runs.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nifsim/experiments.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string mode;
  std::string d_source;
  std::string d_file;
  std::string eps_list;
  std::string pmax_list;
  std::string out_dir;
  long long seed = -1;
  int realizations = -1;
  int workers = -1;
  int periods = -1;
  bool zf = false;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file (defaults match Table-style constants)");
  cmd->add_option("--seed", f.seed, "base RNG seed");
  cmd->add_option("--realizations", f.realizations, "number of Monte-Carlo realizations");
  cmd->add_option("--workers", f.workers, "worker threads (0 = hardware default)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_flag("--strict", f.strict, "fail on infeasible rate requirements instead of best effort");
}

nifsim::RunConfig make_config(const CommonFlags& f) {
  nifsim::RunConfig cfg;
  if (!f.config_path.empty()) cfg = nifsim::parse_config_file(f.config_path);
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (f.realizations >= 0) cfg.realizations = f.realizations;
  if (f.workers >= 0) cfg.workers = f.workers;
  if (f.periods >= 0) cfg.radio.periods = f.periods;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.mode.empty()) cfg.mode = nifsim::scheduler_mode_from_string(f.mode);
  if (f.zf) cfg.zf = true;
  if (f.strict) cfg.strict = true;
  if (!f.d_source.empty()) {
    if (f.d_source == "random") cfg.d_source = nifsim::DemandSource::Random;
    else if (f.d_source == "random-zero-bound") cfg.d_source = nifsim::DemandSource::RandomZeroBound;
    else if (f.d_source == "file") cfg.d_source = nifsim::DemandSource::File;
    else throw nifsim::config_error("bad --d-source: " + f.d_source);
  }
  if (!f.d_file.empty()) cfg.d_file = f.d_file;
  if (!f.eps_list.empty()) cfg.eps_list = nifsim::detail::parse_double_list(f.eps_list);
  if (!f.pmax_list.empty()) cfg.pmax_list_dBm = nifsim::detail::parse_double_list(f.pmax_list);
  if (cfg.realizations < 1) throw nifsim::config_error("realizations must be >= 1");
  cfg.radio.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"near interference-free mmWave scheduling and power allocation simulator"};
  app.require_subcommand(1);

  CommonFlags f;
  auto* scenario = app.add_subcommand("scenario", "generate one scenario and its interference graph");
  add_common(scenario, f);

  auto* graph_stats = app.add_subcommand("graph-stats", "edge and chordless-cycle statistics over an epsilon sweep");
  add_common(graph_stats, f);
  graph_stats->add_option("--eps-list", f.eps_list, "comma-separated epsilon values");

  auto* schedule = app.add_subcommand("schedule", "single-period scheduling vs. the clique lower bound");
  add_common(schedule, f);
  schedule->add_option("--mode", f.mode, "nif | greedy | uncoordinated");
  schedule->add_option("--d-source", f.d_source, "random | random-zero-bound | file");
  schedule->add_option("--d-file", f.d_file, "demand file (one line per cell, U integers)");

  auto* simulate = app.add_subcommand("simulate", "multi-period joint scheduling and power allocation");
  add_common(simulate, f);
  simulate->add_option("--mode", f.mode, "nif | greedy | uncoordinated | is_based");
  simulate->add_option("--periods", f.periods, "scheduling periods per realization");
  simulate->add_flag("--zf", f.zf, "idealized zero-forcing (intra-cell interference cancelled)");
  simulate->add_option("--pmax-sweep", f.pmax_list, "comma-separated Pmax values (dBm) for the feasibility table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const nifsim::RunConfig cfg = make_config(f);
    if (scenario->parsed()) nifsim::cmd_scenario(cfg);
    if (graph_stats->parsed()) nifsim::cmd_graph_stats(cfg);
    if (schedule->parsed()) nifsim::cmd_schedule(cfg);
    if (simulate->parsed()) nifsim::cmd_simulate(cfg);
  } catch (const nifsim::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nifsim::infeasible_error& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const nifsim::io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
