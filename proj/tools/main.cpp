// fsstdef: locate forced-oscillation sources from PMU branch measurements.
//
//   fsstdef analyze --input data.csv --out run/
//   fsstdef compare --input data.csv --out cmp/ --pipeline windowed_band
//   fsstdef synth   --out scenario/ --seed 7 --snr-db 20

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fsstdef/runner.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fsstdef::fail(fsstdef::ErrorCode::parameter, "cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fsstdef::fail(fsstdef::ErrorCode::parameter, "config '" + path + "': " + e.what());
  }
}

struct AnalysisFlags {
  std::string input;
  std::string out;
  std::string config;
  double sigma = 0.0;
  std::vector<double> sigma_grid;
  std::size_t n_ridges = 0;
  double penalty = 0.0;
  double band_halfwidth = 0.0;
  double clear_halfwidth = 0.0;
  double gamma = 0.0;
  std::string pipeline;
  std::uint64_t seed = 0;
  std::size_t hop = 0;
  double max_freq = 0.0;
  std::string tf_export;
};

void add_analysis_flags(CLI::App* cmd, AnalysisFlags& f) {
  cmd->add_option("--input", f.input, "measurement CSV");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--config", f.config, "JSON config; flags override it");
  cmd->add_option("--sigma", f.sigma, "fixed window width in seconds (skips the entropy search)");
  cmd->add_option("--sigma-grid", f.sigma_grid, "candidate window widths")->delimiter(',');
  cmd->add_option("--n-ridges", f.n_ridges, "ridges to extract per branch");
  cmd->add_option("--penalty", f.penalty, "ridge jump penalty per bin");
  cmd->add_option("--band-halfwidth", f.band_halfwidth, "reconstruction half-width d in Hz");
  cmd->add_option("--clear-halfwidth", f.clear_halfwidth, "ridge clearing half-width in Hz");
  cmd->add_option("--gamma", f.gamma, "reassignment threshold relative to max |V|");
  cmd->add_option("--pipeline", f.pipeline, "fsst, fixed_band or windowed_band");
  cmd->add_option("--seed", f.seed, "echoed into the report");
  cmd->add_option("--hop", f.hop, "frame stride in samples");
  cmd->add_option("--max-freq", f.max_freq, "upper edge of the frequency axis in Hz (0 = Nyquist)");
  cmd->add_option("--tf-export", f.tf_export, "none, ridge_channel or all");
}

fsstdef::RunConfig build_config(const CLI::App* cmd, const AnalysisFlags& f) {
  fsstdef::RunConfig cfg;
  if (!f.config.empty()) cfg = fsstdef::config_from_json(load_json(f.config), cfg);
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--input")) cfg.input = f.input;
  if (given("--out")) cfg.out_dir = f.out;
  if (given("--sigma")) cfg.sigma = f.sigma;
  if (given("--sigma-grid")) {
    cfg.sigma_grid = f.sigma_grid;
    if (!given("--sigma")) cfg.sigma.reset();
  }
  if (given("--n-ridges")) cfg.ridge.n_ridges = f.n_ridges;
  if (given("--penalty")) cfg.ridge.penalty = f.penalty;
  if (given("--band-halfwidth")) cfg.d_hz = f.band_halfwidth;
  if (given("--clear-halfwidth")) cfg.ridge.clear_halfwidth_hz = f.clear_halfwidth;
  if (given("--gamma")) cfg.tf.gamma_rel = f.gamma;
  if (given("--pipeline")) cfg = fsstdef::config_from_json({{"pipeline", f.pipeline}}, cfg);
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--hop")) cfg.tf.hop = f.hop;
  if (given("--max-freq")) cfg.tf.max_freq_hz = f.max_freq;
  if (given("--tf-export")) cfg = fsstdef::config_from_json({{"tf_export", f.tf_export}}, cfg);
  return cfg;
}

void print_summary(const fsstdef::RunResult& r, const fsstdef::RunConfig& cfg, bool verbose) {
  const auto& ranking = r.report.at("ranking").contains("fsst") ? r.report.at("ranking").at("fsst") : r.report.at("ranking");
  std::cout << ranking.at("message").get<std::string>() << '\n';
  if (!verbose) return;
  for (const auto& b : ranking.at("branches")) {
    std::cerr << "  " << b.at("branch_id").get<std::string>() << "  aggregate slope " << b.at("aggregate_slope").get<double>()
              << '\n';
  }
  for (const auto& w : r.report.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << '\n';
  std::cerr << "report: " << (cfg.out_dir / "report.json").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forced-oscillation source location with synchrosqueezing and dissipating energy flow"};
  app.set_version_flag("--version", fsstdef::version());
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "print ranking details and warnings");

  AnalysisFlags analyze_flags;
  auto* analyze = app.add_subcommand("analyze", "run the full methodology and rank branches");
  add_analysis_flags(analyze, analyze_flags);
  analyze->add_flag("--verbose", verbose, "print ranking details and warnings");

  AnalysisFlags compare_flags;
  auto* compare = app.add_subcommand("compare", "run FSST and band-pass baselines side by side");
  add_analysis_flags(compare, compare_flags);
  compare->add_flag("--verbose", verbose, "print ranking details and warnings");

  std::string synth_out;
  std::string synth_config;
  std::uint64_t synth_seed = 0;
  double synth_snr = 0.0;
  std::size_t synth_branches = 3;
  auto* synth = app.add_subcommand("synth", "write a synthetic multi-branch scenario with ground truth");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--config", synth_config, "JSON scenario options; flags override it");
  synth->add_option("--seed", synth_seed, "noise seed");
  synth->add_option("--snr-db", synth_snr, "additive noise level (omit for a clean record)");
  synth->add_option("--branches", synth_branches, "number of branches");
  synth->add_flag("--verbose", verbose, "print the ground truth summary");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      fsstdef::SynthConfig cfg;
      if (!synth_config.empty()) cfg = fsstdef::synth_config_from_json(load_json(synth_config), cfg);
      if (synth->count("--out") > 0) cfg.out_dir = synth_out;
      if (synth->count("--seed") > 0) cfg.scenario.seed = synth_seed;
      if (synth->count("--snr-db") > 0) cfg.scenario.snr_db = synth_snr;
      if (synth->count("--branches") > 0) cfg.scenario.n_branches = synth_branches;
      const auto truth = fsstdef::run_synth(cfg);
      std::cout << "source: " << truth.source << '\n';
      if (verbose) {
        for (const auto& b : truth.branches) std::cerr << "  " << b.id << "  DEF per cycle " << b.def_per_cycle << '\n';
      }
      return 0;
    }
    const bool is_analyze = analyze->parsed();
    const auto cfg = is_analyze ? build_config(analyze, analyze_flags) : build_config(compare, compare_flags);
    const auto result = is_analyze ? fsstdef::run_analyze(cfg) : fsstdef::run_compare(cfg);
    print_summary(result, cfg, verbose);
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fsstdef::exit_error;
  }
}
