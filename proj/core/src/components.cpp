#include "fsstdef/components.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "fsstdef/csv.hpp"
#include "fsstdef/error.hpp"

namespace fsstdef {

std::string_view to_string(Channel c) noexcept {
  switch (c) {
    case Channel::p: return "P";
    case Channel::q: return "Q";
    case Channel::vmag: return "Vmag";
    case Channel::vang: return "Vang";
  }
  return "?";
}

Channel channel_from_string(std::string_view name) {
  for (Channel c : all_channels) {
    if (name == to_string(c)) return c;
  }
  fail(ErrorCode::parameter, "unknown channel '" + std::string(name) + "' (expected P, Q, Vmag or Vang)");
}

const TimeSeries& channel_of(const BranchMeasurement& b, Channel c) noexcept {
  switch (c) {
    case Channel::q: return b.q;
    case Channel::vmag: return b.vmag;
    case Channel::vang: return b.vang;
    case Channel::p: break;
  }
  return b.p;
}

double default_band_halfwidth(double df) noexcept { return std::max(0.02, 4.0 * df); }

Component reconstruct(const TfGrid& t, const Ridge& r, double d_hz) {
  const double df = t.df();
  if (!(d_hz >= df)) fail(ErrorCode::parameter, "band half-width must be at least one frequency bin");
  if (r.size() != t.n_times()) fail(ErrorCode::contract_violation, "ridge and grid time axes differ");

  const std::size_t nt = t.n_times();
  Component c;
  c.signal.t0 = nt > 0 ? t.times.front() : 0.0;
  c.signal.dt = nt > 1 ? t.frame_dt() : 1.0;
  c.signal.values.assign(nt, 0.0);
  c.envelope.assign(nt, 0.0);
  for (std::size_t k = 0; k < nt; ++k) {
    if (!r.is_valid(k)) continue;
    const double center = r.freq_hz[k];
    std::complex<double> sum{0.0, 0.0};
    // Bins are uniform from 0, so only the ones near the ridge need visiting.
    const auto lo = static_cast<std::ptrdiff_t>(std::floor((center - d_hz) / df));
    const auto hi = static_cast<std::ptrdiff_t>(std::ceil((center + d_hz) / df));
    const auto top = static_cast<std::ptrdiff_t>(t.n_freqs()) - 1;
    for (auto f = std::max<std::ptrdiff_t>(lo, 0); f <= std::min(hi, top); ++f) {
      const auto fi = static_cast<std::size_t>(f);
      if (std::abs(t.freqs[fi] - center) < d_hz) sum += t.at(fi, k);
    }
    sum *= df;
    c.signal.values[k] = 2.0 * sum.real();
    c.envelope[k] = 2.0 * std::abs(sum);
  }
  return c;
}

namespace {

double mean_valid_frequency(const Ridge& r, bool& any) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (r.is_valid(t)) {
      sum += r.freq_hz[t];
      ++n;
    }
  }
  any = n > 0;
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

HarmonicLabeling label_harmonics(std::span<const Ridge> ridges) {
  if (ridges.empty()) fail(ErrorCode::parameter, "label_harmonics needs at least one ridge");
  std::size_t fundamental = ridges.size();
  double lowest = 0.0;
  for (std::size_t k = 0; k < ridges.size(); ++k) {
    bool any = false;
    const double f = mean_valid_frequency(ridges[k], any);
    if (any && (fundamental == ridges.size() || f < lowest)) {
      fundamental = k;
      lowest = f;
    }
  }

  HarmonicLabeling out;
  out.labels.resize(ridges.size());
  if (fundamental == ridges.size()) {
    out.warnings.push_back("no ridge has a valid sample; harmonics left unlabeled");
    return out;
  }
  const Ridge& base = ridges[fundamental];
  std::map<int, int> taken;
  for (std::size_t k = 0; k < ridges.size(); ++k) {
    int h = 0;
    if (k == fundamental) {
      h = 1;
    } else {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t t = 0; t < base.size(); ++t) {
        if (base.is_valid(t) && ridges[k].is_valid(t) && base.freq_hz[t] > 0.0) {
          sum += ridges[k].freq_hz[t] / base.freq_hz[t];
          ++n;
        }
      }
      if (n > 0) {
        h = static_cast<int>(std::lround(sum / static_cast<double>(n)));
      } else {
        out.warnings.push_back("ridge " + std::to_string(k) + " never overlaps the fundamental; harmonic unknown");
      }
    }
    out.labels[k].harmonic = h;
    if (h > 0) {
      const int seen = taken[h]++;
      out.labels[k].sub_index = seen;
      if (seen > 0) out.warnings.push_back("duplicate harmonic label h=" + std::to_string(h) + " on ridge " + std::to_string(k));
    }
  }
  return out;
}

BranchComponents decompose_branch(const BranchMeasurement& b, const DecomposeParams& params, const GridObserver& observer) {
  const GaussianWindow w = make_window(params.sigma, b.p.dt, params.tf.trunc_mult);

  BranchComponents out;
  out.branch_id = b.branch_id;
  const TfGrid ridge_grid = fsst(channel_of(b, params.ridge_channel), w, params.tf);
  out.ridges = extract_ridges(magnitude(ridge_grid), params.ridge);
  out.labeling = label_harmonics(out.ridges);
  out.d_hz = params.d_hz > 0.0 ? params.d_hz : default_band_halfwidth(ridge_grid.df());

  auto consume = [&](Channel c, const TfGrid& g) {
    if (observer) observer(c, g);
    auto& list = out.components[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < out.ridges.size(); ++k) {
      Component comp = reconstruct(g, out.ridges[k], out.d_hz);
      comp.harmonic = out.labeling.labels[k].harmonic;
      comp.ridge_id = k;
      comp.channel = c;
      list.push_back(std::move(comp));
    }
  };
  for (Channel c : all_channels) {
    if (c == params.ridge_channel) {
      consume(c, ridge_grid);
    } else {
      consume(c, fsst(channel_of(b, c), w, params.tf));
    }
  }
  return out;
}

void write_components_csv(std::ostream& out, const BranchComponents& bc) {
  out << "time_s,channel,harmonic,value\n";
  for (Channel c : all_channels) {
    for (const auto& comp : bc.of(c)) {
      for (std::size_t i = 0; i < comp.signal.size(); ++i) {
        out << csv::format_real(comp.signal.time(i)) << ',' << to_string(c) << ',' << comp.harmonic << ','
            << csv::format_real(comp.signal.values[i]) << '\n';
      }
    }
  }
}

}  // namespace fsstdef
