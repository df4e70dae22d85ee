#include "fsstdef/runner.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <utility>

#include <openssl/evp.h>

#include "fsstdef/csv.hpp"
#include "fsstdef/stats.hpp"

namespace fsstdef {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) fail(ErrorCode::parameter, "config section '" + std::string(where) + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::parameter, "unknown config key '" + std::string(where) + "." + key + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::parameter, std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& target) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    target.reset();
    return;
  }
  T v{};
  read(j, key, v);
  target = v;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string_view to_string(Pipeline p) noexcept {
  switch (p) {
    case Pipeline::fixed_band: return "fixed_band";
    case Pipeline::windowed_band: return "windowed_band";
    case Pipeline::fsst: break;
  }
  return "fsst";
}

Pipeline pipeline_from_string(std::string_view s) {
  if (s == "fsst") return Pipeline::fsst;
  if (s == "fixed_band") return Pipeline::fixed_band;
  if (s == "windowed_band") return Pipeline::windowed_band;
  fail(ErrorCode::parameter, "unknown pipeline '" + std::string(s) + "' (fsst, fixed_band, windowed_band)");
}

std::string_view to_string(TfExport e) noexcept {
  switch (e) {
    case TfExport::none: return "none";
    case TfExport::all: return "all";
    case TfExport::ridge_channel: break;
  }
  return "ridge_channel";
}

TfExport tf_export_from_string(std::string_view s) {
  if (s == "none") return TfExport::none;
  if (s == "ridge_channel") return TfExport::ridge_channel;
  if (s == "all") return TfExport::all;
  fail(ErrorCode::parameter, "unknown tf_export '" + std::string(s) + "' (none, ridge_channel, all)");
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig cfg) {
  reject_unknown(j,
                 {"input", "out_dir", "schema", "outlier_k", "detrend", "sigma", "sigma_grid", "tf", "ridge", "d_hz",
                  "onset", "fit", "pipeline", "bands", "auto_band_e", "windowed", "seed", "tf_export"},
                 "config");
  if (j.contains("input")) cfg.input = j.at("input").get<std::string>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("schema")) {
    const auto& s = j.at("schema");
    reject_unknown(s, {"time", "branch", "p", "q", "vmag", "vang"}, "schema");
    read(s, "time", cfg.schema.time);
    read(s, "branch", cfg.schema.branch);
    read(s, "p", cfg.schema.p);
    read(s, "q", cfg.schema.q);
    read(s, "vmag", cfg.schema.vmag);
    read(s, "vang", cfg.schema.vang);
  }
  read(j, "outlier_k", cfg.outlier_k);
  if (j.contains("detrend")) {
    const auto& d = j.at("detrend");
    reject_unknown(d, {"mode", "window_s", "cutoff_hz"}, "detrend");
    std::string mode = std::holds_alternative<MeanTrend>(cfg.detrend.mode) ? "mean" : "moving_average";
    read(d, "mode", mode);
    if (mode == "mean") {
      cfg.detrend.mode = MeanTrend{};
    } else if (mode == "moving_average") {
      MovingAverageTrend m;
      if (const auto* prev = std::get_if<MovingAverageTrend>(&cfg.detrend.mode)) m = *prev;
      read(d, "window_s", m.window_s);
      cfg.detrend.mode = m;
    } else {
      fail(ErrorCode::parameter, "unknown detrend mode '" + mode + "' (mean, moving_average)");
    }
    read_optional(d, "cutoff_hz", cfg.detrend.cutoff_hz);
  }
  read_optional(j, "sigma", cfg.sigma);
  read(j, "sigma_grid", cfg.sigma_grid);
  if (j.contains("tf")) {
    const auto& t = j.at("tf");
    reject_unknown(t, {"n_freq", "hop", "gamma_rel", "trunc_mult", "max_freq_hz"}, "tf");
    read(t, "n_freq", cfg.tf.n_freq);
    read(t, "hop", cfg.tf.hop);
    read(t, "gamma_rel", cfg.tf.gamma_rel);
    read(t, "trunc_mult", cfg.tf.trunc_mult);
    read(t, "max_freq_hz", cfg.tf.max_freq_hz);
  }
  if (j.contains("ridge")) {
    const auto& r = j.at("ridge");
    reject_unknown(r, {"n_ridges", "penalty", "clear_halfwidth_hz", "validity_rel", "stop_rel", "channel"}, "ridge");
    read(r, "n_ridges", cfg.ridge.n_ridges);
    read(r, "penalty", cfg.ridge.penalty);
    read(r, "clear_halfwidth_hz", cfg.ridge.clear_halfwidth_hz);
    read(r, "validity_rel", cfg.ridge.validity_rel);
    read(r, "stop_rel", cfg.ridge.stop_rel);
    if (r.contains("channel")) cfg.ridge_channel = channel_from_string(r.at("channel").get<std::string>());
  }
  read(j, "d_hz", cfg.d_hz);
  if (j.contains("onset")) {
    const auto& o = j.at("onset");
    reject_unknown(o, {"k_mad", "baseline_span_s"}, "onset");
    read(o, "k_mad", cfg.onset.k_mad);
    read(o, "baseline_span_s", cfg.onset.baseline_span_s);
  }
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    reject_unknown(f, {"trailing_s"}, "fit");
    read_optional(f, "trailing_s", cfg.fit.trailing_s);
  }
  if (j.contains("pipeline")) cfg.pipeline = pipeline_from_string(j.at("pipeline").get<std::string>());
  if (j.contains("bands")) {
    const auto& b = j.at("bands");
    cfg.bands.clear();
    if (b.is_string()) {
      if (b.get<std::string>() != "auto") fail(ErrorCode::parameter, "bands must be a list or \"auto\"");
    } else {
      if (!b.is_array()) fail(ErrorCode::parameter, "bands must be a list or \"auto\"");
      for (const auto& item : b) {
        reject_unknown(item, {"f_center", "e"}, "bands[]");
        BandSpec spec;
        read(item, "f_center", spec.f_center);
        read(item, "e", spec.e);
        cfg.bands.push_back(spec);
      }
    }
  }
  read(j, "auto_band_e", cfg.auto_band_e);
  if (j.contains("windowed")) {
    const auto& w = j.at("windowed");
    reject_unknown(w, {"segment_len_s", "window_len_s", "e", "peak_rel", "crossfade_s", "max_harmonic"}, "windowed");
    read(w, "segment_len_s", cfg.windowed.segment_len_s);
    read(w, "window_len_s", cfg.windowed.window_len_s);
    read(w, "e", cfg.windowed.e);
    read(w, "peak_rel", cfg.windowed.peak_rel);
    read(w, "crossfade_s", cfg.windowed.crossfade_s);
    read(w, "max_harmonic", cfg.windowed.max_harmonic);
  }
  read(j, "seed", cfg.seed);
  if (j.contains("tf_export")) cfg.tf_export = tf_export_from_string(j.at("tf_export").get<std::string>());
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["input"] = cfg.input.string();
  j["out_dir"] = cfg.out_dir.string();
  j["schema"] = {{"time", cfg.schema.time}, {"branch", cfg.schema.branch}, {"p", cfg.schema.p},
                 {"q", cfg.schema.q},       {"vmag", cfg.schema.vmag},     {"vang", cfg.schema.vang}};
  j["outlier_k"] = cfg.outlier_k;
  json d;
  if (const auto* m = std::get_if<MovingAverageTrend>(&cfg.detrend.mode)) {
    d["mode"] = "moving_average";
    d["window_s"] = m->window_s;
  } else {
    d["mode"] = "mean";
  }
  d["cutoff_hz"] = optional_json(cfg.detrend.cutoff_hz);
  j["detrend"] = d;
  j["sigma"] = optional_json(cfg.sigma);
  j["sigma_grid"] = cfg.sigma_grid;
  j["tf"] = {{"n_freq", cfg.tf.n_freq},
             {"hop", cfg.tf.hop},
             {"gamma_rel", cfg.tf.gamma_rel},
             {"trunc_mult", cfg.tf.trunc_mult},
             {"max_freq_hz", cfg.tf.max_freq_hz}};
  j["ridge"] = {{"n_ridges", cfg.ridge.n_ridges},
                {"penalty", cfg.ridge.penalty},
                {"clear_halfwidth_hz", cfg.ridge.clear_halfwidth_hz},
                {"validity_rel", cfg.ridge.validity_rel},
                {"stop_rel", cfg.ridge.stop_rel},
                {"channel", std::string(to_string(cfg.ridge_channel))}};
  j["d_hz"] = cfg.d_hz;
  j["onset"] = {{"k_mad", cfg.onset.k_mad}, {"baseline_span_s", cfg.onset.baseline_span_s}};
  j["fit"] = {{"trailing_s", optional_json(cfg.fit.trailing_s)}};
  j["pipeline"] = std::string(to_string(cfg.pipeline));
  if (cfg.bands.empty()) {
    j["bands"] = "auto";
  } else {
    j["bands"] = json::array();
    for (const auto& b : cfg.bands) j["bands"].push_back({{"f_center", b.f_center}, {"e", b.e}});
  }
  j["auto_band_e"] = cfg.auto_band_e;
  j["windowed"] = {{"segment_len_s", cfg.windowed.segment_len_s}, {"window_len_s", cfg.windowed.window_len_s},
                   {"e", cfg.windowed.e},                         {"peak_rel", cfg.windowed.peak_rel},
                   {"crossfade_s", cfg.windowed.crossfade_s},     {"max_harmonic", cfg.windowed.max_harmonic}};
  j["seed"] = cfg.seed;
  j["tf_export"] = std::string(to_string(cfg.tf_export));
  return j;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::parameter, "invalid config: " + what);
  };
  require(c.outlier_k > 0.0, "outlier_k must be positive");
  if (const auto* m = std::get_if<MovingAverageTrend>(&c.detrend.mode)) require(m->window_s > 0.0, "detrend.window_s must be positive");
  if (c.detrend.cutoff_hz) require(*c.detrend.cutoff_hz > 0.0, "detrend.cutoff_hz must be positive");
  if (c.sigma) {
    require(*c.sigma > 0.0, "sigma must be positive");
  } else {
    require(!c.sigma_grid.empty(), "sigma_grid must not be empty when sigma is unset");
    for (double s : c.sigma_grid) require(s > 0.0, "sigma_grid entries must be positive");
  }
  require(c.tf.hop >= 1, "tf.hop must be >= 1");
  require(c.tf.gamma_rel > 0.0 && c.tf.gamma_rel < 1.0, "tf.gamma_rel must lie in (0, 1)");
  require(c.tf.trunc_mult > 0.0, "tf.trunc_mult must be positive");
  require(c.tf.max_freq_hz >= 0.0, "tf.max_freq_hz must be non-negative");
  require(c.ridge.n_ridges >= 1, "ridge.n_ridges must be >= 1");
  require(c.ridge.penalty >= 0.0, "ridge.penalty must be non-negative");
  require(c.ridge.clear_halfwidth_hz >= 0.0, "ridge.clear_halfwidth_hz must be non-negative");
  require(c.ridge.validity_rel >= 0.0 && c.ridge.validity_rel <= 1.0, "ridge.validity_rel must lie in [0, 1]");
  require(c.ridge.stop_rel >= 0.0 && c.ridge.stop_rel < 1.0, "ridge.stop_rel must lie in [0, 1)");
  require(c.d_hz >= 0.0, "d_hz must be non-negative");
  if (c.d_hz > 0.0 && c.ridge.clear_halfwidth_hz > 0.0) {
    require(c.ridge.clear_halfwidth_hz > c.d_hz, "ridge.clear_halfwidth_hz must exceed d_hz");
  }
  require(c.onset.k_mad > 0.0, "onset.k_mad must be positive");
  require(c.onset.baseline_span_s >= 0.0, "onset.baseline_span_s must be non-negative");
  if (c.fit.trailing_s) require(*c.fit.trailing_s > 0.0, "fit.trailing_s must be positive");
  for (const auto& b : c.bands) require(b.f_center > 0.0 && b.e > 0.0 && b.e < 0.5, "bands need f_center > 0 and 0 < e < 0.5");
  require(c.auto_band_e > 0.0 && c.auto_band_e < 0.5, "auto_band_e must lie in (0, 0.5)");
  require(c.windowed.segment_len_s > 0.0, "windowed.segment_len_s must be positive");
  require(c.windowed.window_len_s >= 0.0, "windowed.window_len_s must be non-negative");
  require(c.windowed.e > 0.0 && c.windowed.e < 0.5, "windowed.e must lie in (0, 0.5)");
  require(c.windowed.peak_rel > 0.0 && c.windowed.peak_rel < 1.0, "windowed.peak_rel must lie in (0, 1)");
  require(c.windowed.crossfade_s >= 0.0, "windowed.crossfade_s must be non-negative");
  require(c.windowed.max_harmonic >= 1, "windowed.max_harmonic must be >= 1");
}

// ---------------------------------------------------------------------------
// Errors, digests

StageError::StageError(std::string stage, std::string branch, const Error& cause, std::string hint)
    : Error(cause.code(), "stage '" + stage + "'" + (branch.empty() ? "" : " on branch '" + branch + "'") + " failed: " +
                              cause.what() + (hint.empty() ? "" : " (hint: " + hint + ")")),
      stage_(std::move(stage)),
      branch_(std::move(branch)),
      hint_(std::move(hint)) {}

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::data, "cannot read '" + file.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string version() noexcept { return FSSTDEF_VERSION; }

// ---------------------------------------------------------------------------
// Pipeline

namespace {

template <class F>
auto stage(const char* name, const std::string& branch, const char* hint, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, branch, e, hint);
  }
}

std::string safe_name(std::string_view id) {
  std::string out(id);
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

/// Files written to the output directory, with their digests.
class ArtifactSet {
 public:
  explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path path = dir_ / name;
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) fail(ErrorCode::data, "cannot write '" + path.string() + "'");
      body(out);
      if (!out) fail(ErrorCode::data, "write failed for '" + path.string() + "'");
    }
    digests_[name] = sha256_hex(path);
  }

  const json& digests() const noexcept { return digests_; }

 private:
  fs::path dir_;
  json digests_ = json::object();
};

struct Input {
  std::vector<BranchMeasurement> branches;
  std::string digest;
};

Input load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) fail(ErrorCode::parameter, "no input file given");
  std::ifstream in(cfg.input, std::ios::binary);
  if (!in) throw StageError("parse", "", Error(ErrorCode::parse, "cannot open '" + cfg.input.string() + "'"), "check --input");
  Input out;
  out.branches = stage("parse", "", "check the CSV header names against the schema", [&] {
    return parse_measurements(in, cfg.schema);
  });
  out.digest = sha256_hex(cfg.input);
  return out;
}

void validate_against(const RunConfig& cfg, const BranchMeasurement& b) {
  const double nyq = b.p.nyquist();
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::parameter, "invalid config for sample rate " + csv::format_real(1.0 / b.p.dt) + " Hz: " + what);
  };
  if (cfg.detrend.cutoff_hz) require(*cfg.detrend.cutoff_hz < nyq, "detrend.cutoff_hz must be below Nyquist");
  for (const auto& band : cfg.bands) require((1.0 + 2.0 * band.e) * band.f_center < nyq, "band cutoff above Nyquist");
}

void open_output(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) fail(ErrorCode::parameter, "no output directory given");
  fs::create_directories(cfg.out_dir);
  fs::remove(cfg.out_dir / ".partial");
}

void mark_partial(const RunConfig& cfg, const std::string& message) {
  std::error_code ec;
  if (!fs::is_directory(cfg.out_dir, ec)) return;
  std::ofstream(cfg.out_dir / ".partial") << message << '\n';
}

struct Prepared {
  BranchMeasurement raw;
  BranchMeasurement detrended;
};

Prepared prepare(const BranchMeasurement& b, const RunConfig& cfg) {
  Prepared p;
  p.raw = stage("preprocess", b.branch_id, "too many missing samples; check the recording", [&] {
    return preprocess_branch(b, cfg.outlier_k);
  });
  p.detrended = stage("detrend", b.branch_id, "adjust detrend.window_s / detrend.cutoff_hz", [&] {
    BranchMeasurement d = p.raw;
    d.p = detrend(p.raw.p, cfg.detrend);
    d.q = detrend(p.raw.q, cfg.detrend);
    d.vmag = detrend(p.raw.vmag, cfg.detrend);
    d.vang = AngleSeries(detrend(p.raw.vang, cfg.detrend));
    return d;
  });
  return p;
}

struct FsstBranch {
  std::string id;
  std::optional<SigmaSelection> selection;
  double sigma = 0.0;
  BranchComponents bc;
  Onset onset;
  std::vector<DefSeries> defs;
};

double mean_valid_frequency(const Ridge& r) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (r.is_valid(t)) {
      sum += r.freq_hz[t];
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

FsstBranch analyze_fsst(const Prepared& p, const RunConfig& cfg, ArtifactSet& artifacts) {
  const std::string& id = p.raw.branch_id;
  FsstBranch out;
  out.id = id;
  const TimeSeries& ridge_signal = channel_of(p.detrended, cfg.ridge_channel);
  if (cfg.sigma) {
    out.sigma = *cfg.sigma;
  } else {
    out.selection = stage("select_sigma", id, "use a sigma_grid with windows shorter than the record", [&] {
      return select_sigma(ridge_signal, cfg.sigma_grid, cfg.tf);
    });
    out.sigma = out.selection->sigma;
  }

  DecomposeParams dp;
  dp.sigma = out.sigma;
  dp.tf = cfg.tf;
  dp.ridge = cfg.ridge;
  dp.d_hz = cfg.d_hz;
  dp.ridge_channel = cfg.ridge_channel;
  GridObserver observer;
  if (cfg.tf_export != TfExport::none) {
    observer = [&](Channel c, const TfGrid& g) {
      if (cfg.tf_export == TfExport::all || c == cfg.ridge_channel) {
        artifacts.write("tf_" + safe_name(id) + "_" + std::string(to_string(c)) + ".csv",
                        [&](std::ostream& os) { write_tf_csv(os, g); });
      }
    };
  }
  out.bc = stage("decompose", id, "lower ridge.n_ridges or raise tf.gamma_rel; a silent channel has no ridges", [&] {
    return decompose_branch(p.detrended, dp, observer);
  });
  artifacts.write("ridges_" + safe_name(id) + ".csv", [&](std::ostream& os) { write_ridges_csv(os, out.bc.ridges); });
  artifacts.write("components_" + safe_name(id) + ".csv", [&](std::ostream& os) { write_components_csv(os, out.bc); });

  out.onset = stage("onset", id, "set onset.baseline_span_s shorter than the record", [&] {
    return detect_onset(out.bc.of(cfg.ridge_channel), cfg.onset);
  });

  out.defs = stage("def", id, "voltage magnitude must stay positive", [&] {
    std::vector<DefSeries> defs;
    const auto& first = out.bc.of(Channel::p).front().signal;
    std::vector<double> v;
    for (std::size_t k = 0; k < first.size(); ++k) v.push_back(p.raw.vmag.values[std::min(k * cfg.tf.hop, p.raw.vmag.size() - 1)]);
    const TimeSeries v_frames = with_values(first, std::move(v));
    for (std::size_t k = 0; k < out.bc.ridges.size(); ++k) {
      DefSeries w = def_series(out.bc.of(Channel::p)[k].signal, out.bc.of(Channel::vang)[k].signal,
                               out.bc.of(Channel::q)[k].signal, out.bc.of(Channel::vmag)[k].signal, v_frames,
                               out.onset.index);
      w.branch_id = id;
      w.harmonic = out.bc.labeling.labels[k].harmonic;
      w.ridge_id = k;
      defs.push_back(std::move(w));
    }
    return defs;
  });
  return out;
}

std::vector<BandSpec> auto_bands(const RunConfig& cfg, const Prepared& p) {
  if (!cfg.bands.empty()) return cfg.bands;
  std::vector<BandSpec> bands;
  const TimeSeries& s = channel_of(p.detrended, cfg.ridge_channel);
  for (const auto& peak : dft_peaks(s, cfg.ridge.n_ridges, 0.1)) {
    BandSpec b{peak.freq_hz, cfg.auto_band_e, std::nullopt};
    if ((1.0 - 2.0 * b.e) * b.f_center > 0.0 && (1.0 + 2.0 * b.e) * b.f_center < s.nyquist()) bands.push_back(b);
  }
  std::sort(bands.begin(), bands.end(), [](const BandSpec& a, const BandSpec& b) { return a.f_center < b.f_center; });
  if (bands.empty()) fail(ErrorCode::no_ridge, "no spectral peak to centre a band on");
  return bands;
}

std::vector<DefSeries> run_baseline(Pipeline which, const RunConfig& cfg, const Prepared& p, std::size_t onset,
                                    std::vector<BandSpec>* bands_used) {
  const std::string& id = p.raw.branch_id;
  if (which == Pipeline::fixed_band) {
    return stage("fixed_band", id, "check band centres and e against the sample rate", [&] {
      auto bands = auto_bands(cfg, p);
      if (bands_used) *bands_used = bands;
      return fixed_band_pipeline(p.detrended, p.raw.vmag, bands, onset);
    });
  }
  return stage("windowed_band", id, "check windowed.segment_len_s against the record length", [&] {
    return windowed_band_pipeline(p.detrended, p.raw.vmag, cfg.windowed, onset);
  });
}

json entropy_value(double h) { return std::isfinite(h) ? json(h) : json(nullptr); }

json branch_json(const FsstBranch& b) {
  json j;
  j["id"] = b.id;
  j["sigma"] = b.sigma;
  if (b.selection) {
    json curve = json::array();
    for (const auto& pt : b.selection->curve) {
      curve.push_back({{"sigma", pt.sigma},
                       {"feasible", pt.feasible},
                       {"fsst_entropy", pt.feasible ? entropy_value(pt.fsst_entropy) : json(nullptr)},
                       {"stft_entropy", pt.feasible ? entropy_value(pt.stft_entropy) : json(nullptr)}});
    }
    j["sigma_curve"] = curve;
    j["sigma_fft_length"] = b.selection->fft_length;
  }
  j["band_halfwidth_hz"] = b.bc.d_hz;
  j["onset_index"] = b.onset.index;
  j["onset_s"] = b.defs.empty() ? 0.0 : b.defs.front().t[b.onset.index];
  json ridges = json::array();
  for (std::size_t k = 0; k < b.bc.ridges.size(); ++k) {
    const Ridge& r = b.bc.ridges[k];
    const auto valid = static_cast<double>(std::count(r.valid.begin(), r.valid.end(), 1));
    ridges.push_back({{"id", k},
                      {"harmonic", b.bc.labeling.labels[k].harmonic},
                      {"sub_index", b.bc.labeling.labels[k].sub_index},
                      {"mean_freq_hz", mean_valid_frequency(r)},
                      {"energy", r.energy},
                      {"valid_fraction", valid / static_cast<double>(r.size())}});
  }
  j["ridges"] = ridges;
  return j;
}

json ranking_json(const SourceReport& rep) {
  json entries = json::array();
  for (const auto& e : rep.entries) {
    entries.push_back({{"branch_id", e.branch_id},
                       {"harmonic", e.harmonic},
                       {"ridge_id", e.ridge_id},
                       {"slope", e.slope},
                       {"confidence", e.confidence}});
  }
  json branches = json::array();
  for (const auto& b : rep.branches) branches.push_back({{"branch_id", b.branch_id}, {"aggregate_slope", b.slope}});
  return {{"entries", entries},
          {"branches", branches},
          {"verdict", rep.verdict ? json(*rep.verdict) : json(nullptr)},
          {"message", rep.verdict ? "source: " + *rep.verdict : std::string(no_source_message)}};
}

json def_entries(std::span<const DefSeries> defs, const FitSpan& span) {
  json out = json::array();
  for (const auto& d : defs) {
    const SlopeFit fit = def_slope(d, span);
    out.push_back({{"harmonic", d.harmonic},
                   {"ridge_id", d.ridge_id},
                   {"slope", fit.slope},
                   {"confidence", fit.r_squared},
                   {"terminal_w", d.w.back()}});
  }
  return out;
}

json base_report(const char* command, const RunConfig& cfg, const Input& in) {
  json r;
  r["command"] = command;
  r["version"] = version();
  r["config"] = to_json(cfg);
  const auto& first = in.branches.front();
  r["input"] = {{"path", cfg.input.string()},
                {"sha256", in.digest},
                {"branches", in.branches.size()},
                {"samples", first.p.size()},
                {"dt_s", first.p.dt}};
  return r;
}

void finish_report(const RunConfig& cfg, json& report, const ArtifactSet& artifacts) {
  report["artifacts"] = artifacts.digests();
  std::ofstream out(cfg.out_dir / "report.json", std::ios::binary);
  out << report.dump(2) << '\n';
  if (!out) fail(ErrorCode::data, "cannot write report.json");
}

template <class Body>
RunResult guarded(const RunConfig& cfg, Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    mark_partial(cfg, e.what());
    throw;
  }
}

std::vector<Prepared> prepare_all(const RunConfig& cfg, const Input& in) {
  std::vector<Prepared> out;
  for (const auto& b : in.branches) out.push_back(prepare(b, cfg));
  return out;
}

}  // namespace

RunResult run_analyze(const RunConfig& cfg) {
  validate(cfg);
  const Input in = load_input(cfg);
  for (const auto& b : in.branches) validate_against(cfg, b);
  open_output(cfg);
  return guarded(cfg, [&] {
    ArtifactSet artifacts(cfg.out_dir);
    const auto prepared = prepare_all(cfg, in);
    json report = base_report("analyze", cfg, in);
    json warnings = json::array();
    json branches = json::array();
    std::vector<DefSeries> all;
    for (const auto& p : prepared) {
      if (cfg.pipeline == Pipeline::fsst) {
        FsstBranch fb = analyze_fsst(p, cfg, artifacts);
        json bj = branch_json(fb);
        bj["def"] = stage("slope", fb.id, "use a longer record or a later onset", [&] { return def_entries(fb.defs, cfg.fit); });
        branches.push_back(bj);
        if (fb.selection) {
          for (const auto& w : fb.selection->warnings) warnings.push_back(fb.id + ": " + w);
        }
        for (const auto& w : fb.bc.labeling.warnings) warnings.push_back(fb.id + ": " + w);
        if (fb.onset.warning) warnings.push_back(fb.id + ": " + *fb.onset.warning);
        all.insert(all.end(), fb.defs.begin(), fb.defs.end());
      } else {
        std::vector<BandSpec> bands;
        auto defs = run_baseline(cfg.pipeline, cfg, p, 0, &bands);
        json bj{{"id", p.raw.branch_id}};
        bj["def"] = stage("slope", p.raw.branch_id, "use a longer record", [&] { return def_entries(defs, cfg.fit); });
        if (!bands.empty()) {
          bj["bands"] = json::array();
          for (const auto& b : bands) bj["bands"].push_back({{"f_center", b.f_center}, {"e", b.e}});
        }
        branches.push_back(bj);
        all.insert(all.end(), defs.begin(), defs.end());
      }
    }
    artifacts.write("def.csv", [&](std::ostream& os) { write_def_csv(os, all); });
    const SourceReport ranking = stage("rank", "", "no DEF series produced", [&] { return rank_sources(all, cfg.fit); });
    report["branches"] = branches;
    report["ranking"] = ranking_json(ranking);
    report["warnings"] = warnings;
    finish_report(cfg, report, artifacts);
    return RunResult{report, ranking.verdict ? exit_source_found : exit_no_source};
  });
}

namespace {

struct Crossing {
  std::vector<unsigned char> inside;
  bool any = false;
};

/// Samples whose ridge frequency lies within the band's cutoff interval.
Crossing crossing_of(const Ridge& r, const BandSpec& band) {
  Crossing c;
  c.inside.resize(r.size());
  const double lo = (1.0 - 2.0 * band.e) * band.f_center;
  const double hi = (1.0 + 2.0 * band.e) * band.f_center;
  for (std::size_t t = 0; t < r.size(); ++t) {
    c.inside[t] = r.is_valid(t) && r.freq_hz[t] >= lo && r.freq_hz[t] <= hi;
    c.any = c.any || c.inside[t];
  }
  return c;
}

json compare_pair(const DefSeries& fsst_w, const DefSeries& base, const Ridge* ridge, const BandSpec* band) {
  json j;
  const double wf = fsst_w.w.back();
  const double wb = base.w.back();
  j["fsst_harmonic"] = fsst_w.harmonic;
  j["baseline_id"] = base.harmonic;
  j["terminal_w_fsst"] = wf;
  j["terminal_w_baseline"] = wb;
  j["terminal_ratio"] = wf != 0.0 ? json(wb / wf) : json(nullptr);
  j["sign_agreement"] = (wf > 0.0) == (wb > 0.0);
  const double tv_f = stats::total_variation(fsst_w.w);
  const double tv_b = stats::total_variation(base.w);
  j["total_variation_fsst"] = tv_f;
  j["total_variation_baseline"] = tv_b;
  j["fsst_smoother"] = tv_f <= tv_b;
  if (ridge != nullptr && band != nullptr && ridge->size() == base.size()) {
    const Crossing c = crossing_of(*ridge, *band);
    double inside = 0.0;
    double total = 0.0;
    double df_in = 0.0, db_in = 0.0, df_out = 0.0, db_out = 0.0;
    for (std::size_t i = 0; i + 1 < base.size(); ++i) {
      const double step = std::abs(base.w[i + 1] - base.w[i]);
      total += step;
      if (c.inside[i]) {
        inside += step;
        df_in += fsst_w.w[i + 1] - fsst_w.w[i];
        db_in += base.w[i + 1] - base.w[i];
      } else {
        df_out += fsst_w.w[i + 1] - fsst_w.w[i];
        db_out += base.w[i + 1] - base.w[i];
      }
    }
    j["crossing_found"] = c.any;
    j["tv_fraction_in_crossing"] = total > 0.0 ? json(inside / total) : json(nullptr);
    j["sign_agreement_in_crossing"] = (df_in > 0.0) == (db_in > 0.0);
    j["sign_agreement_outside_crossing"] = (df_out > 0.0) == (db_out > 0.0);
    j["flag"] = !((df_out > 0.0) == (db_out > 0.0)) ? "baseline disagrees outside the band-crossing interval"
                                                      : "";
  }
  return j;
}

}  // namespace

RunResult run_compare(const RunConfig& cfg) {
  validate(cfg);
  const Input in = load_input(cfg);
  for (const auto& b : in.branches) validate_against(cfg, b);
  open_output(cfg);
  return guarded(cfg, [&] {
    ArtifactSet artifacts(cfg.out_dir);
    const auto prepared = prepare_all(cfg, in);
    json report = base_report("compare", cfg, in);
    std::vector<Pipeline> baselines;
    if (cfg.pipeline == Pipeline::fsst) {
      baselines = {Pipeline::fixed_band, Pipeline::windowed_band};
    } else {
      baselines = {cfg.pipeline};
    }

    std::vector<DefSeries> fsst_all;
    std::map<Pipeline, std::vector<DefSeries>> base_all;
    json branches = json::array();
    json warnings = json::array();
    for (const auto& p : prepared) {
      FsstBranch fb = analyze_fsst(p, cfg, artifacts);
      if (fb.onset.warning) warnings.push_back(fb.id + ": " + *fb.onset.warning);
      json bj = branch_json(fb);
      bj["def"] = def_entries(fb.defs, cfg.fit);
      fsst_all.insert(fsst_all.end(), fb.defs.begin(), fb.defs.end());
      json cmp = json::object();
      for (Pipeline which : baselines) {
        std::vector<BandSpec> bands;
        const auto defs = run_baseline(which, cfg, p, fb.onset.index, &bands);
        json pairs = json::array();
        for (std::size_t i = 0; i < defs.size(); ++i) {
          const DefSeries* partner = nullptr;
          const Ridge* ridge = nullptr;
          const BandSpec* band = nullptr;
          if (which == Pipeline::fixed_band) {
            band = &bands[i];
            double best = 0.0;
            for (std::size_t k = 0; k < fb.defs.size(); ++k) {
              const double gap = std::abs(mean_valid_frequency(fb.bc.ridges[k]) - band->f_center);
              if (partner == nullptr || gap < best) {
                partner = &fb.defs[k];
                ridge = &fb.bc.ridges[k];
                best = gap;
              }
            }
          } else {
            for (std::size_t k = 0; k < fb.defs.size() && partner == nullptr; ++k) {
              if (fb.defs[k].harmonic == defs[i].harmonic) partner = &fb.defs[k];
            }
          }
          if (partner == nullptr) continue;
          json pj = compare_pair(*partner, defs[i], ridge, band);
          if (band != nullptr) pj["band"] = {{"f_center", band->f_center}, {"e", band->e}};
          pairs.push_back(pj);
        }
        cmp[std::string(to_string(which))] = pairs;
        auto& sink = base_all[which];
        sink.insert(sink.end(), defs.begin(), defs.end());
      }
      bj["comparison"] = cmp;
      branches.push_back(bj);
    }
    artifacts.write("def_fsst.csv", [&](std::ostream& os) { write_def_csv(os, fsst_all); });
    json rankings;
    for (const auto& [which, defs] : base_all) {
      const std::string name(to_string(which));
      artifacts.write("def_" + name + ".csv", [&](std::ostream& os) { write_def_csv(os, defs); });
      rankings[name] = ranking_json(stage("rank", "", "no DEF series produced", [&] { return rank_sources(defs, cfg.fit); }));
    }
    const SourceReport ranking = stage("rank", "", "no DEF series produced", [&] { return rank_sources(fsst_all, cfg.fit); });
    rankings["fsst"] = ranking_json(ranking);
    report["branches"] = branches;
    report["ranking"] = rankings;
    report["warnings"] = warnings;
    finish_report(cfg, report, artifacts);
    return RunResult{report, ranking.verdict ? exit_source_found : exit_no_source};
  });
}

SynthConfig synth_config_from_json(const json& j, SynthConfig cfg) {
  reject_unknown(j, {"out_dir", "n_branches", "harmonics", "snr_db", "seed", "chirp"}, "synth");
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  read(j, "n_branches", cfg.scenario.n_branches);
  read(j, "harmonics", cfg.scenario.harmonics);
  read_optional(j, "snr_db", cfg.scenario.snr_db);
  read(j, "seed", cfg.scenario.seed);
  if (j.contains("chirp")) {
    const auto& c = j.at("chirp");
    reject_unknown(c, {"f_start", "f_end", "duration", "fs", "amplitude", "waveform", "duty"}, "chirp");
    auto& ch = cfg.scenario.chirp;
    read(c, "f_start", ch.f_start);
    read(c, "f_end", ch.f_end);
    read(c, "duration", ch.duration);
    read(c, "fs", ch.fs);
    read(c, "amplitude", ch.amplitude);
    read(c, "duty", ch.duty);
    if (c.contains("waveform")) {
      const auto w = c.at("waveform").get<std::string>();
      if (w == "square") ch.waveform = Waveform::square;
      else if (w == "sine") ch.waveform = Waveform::sine;
      else fail(ErrorCode::parameter, "unknown waveform '" + w + "' (square, sine)");
    }
  }
  return cfg;
}

GroundTruth run_synth(const SynthConfig& cfg) {
  if (cfg.out_dir.empty()) fail(ErrorCode::parameter, "no output directory given");
  const Scenario sc = build_scenario(default_scenario(cfg.scenario));
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out(cfg.out_dir / "measurements.csv", std::ios::binary);
    write_measurements(out, sc.branches);
    if (!out) fail(ErrorCode::data, "cannot write measurements.csv");
  }
  std::ofstream truth(cfg.out_dir / "ground_truth.json", std::ios::binary);
  write_ground_truth(truth, sc.truth);
  if (!truth) fail(ErrorCode::data, "cannot write ground_truth.json");
  return sc.truth;
}

}  // namespace fsstdef
