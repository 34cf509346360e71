// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo link-level driver: seeded, trial-parallel, deterministic.
//
// Reproducibility contract: a SimResult is a pure function of (SimConfig
// minus worker count). Every trial draws its randomness from a sub-stream
// derived from (master seed, SNR point index, trial index), workers own
// trials by static striping inside fixed-size batches, and accumulators are
// integers, so neither thread count nor scheduling can change a result.
//
// Error accounting: a trial is a codeword error if ANY user's decoded symbol
// vector differs from the transmitted one; per-user error rates are recorded
// alongside. Both statistics are emitted since either reading of "codeword
// error rate" may be wanted for comparisons.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "icmac/channel.hpp"
#include "icmac/constellation.hpp"
#include "icmac/diversity.hpp"
#include "icmac/errors.hpp"
#include "icmac/picgd.hpp"
#include "icmac/rng.hpp"
#include "icmac/stbc.hpp"

namespace icmac {

enum class HarnessDecoder { Picgd, PicgdSic, MlJoint };

struct SimConfig {
  SchemeKind scheme = SchemeKind::TwoUser;
  std::size_t nt = 2, n = 3, nr = 1;
  unsigned mod_order = 4;
  HarnessDecoder decoder = HarnessDecoder::Picgd;
  double ebn0_start = 0.0, ebn0_stop = 40.0, ebn0_step = 5.0;
  std::uint64_t min_trials = 1000;
  std::uint64_t max_trials = 10000000;
  std::uint64_t min_errors = 100;
  std::uint64_t batch = 8192;
  std::uint64_t seed = 42;
  unsigned workers = 1;  // 0 = hardware concurrency
  bool sic_snr_order = false;
  std::uint64_t ml_cap = 1u << 20;

  void validate() const {
    if (ebn0_step <= 0.0) throw ConfigError("ebn0 step must be positive");
    if (ebn0_stop < ebn0_start) throw ConfigError("ebn0 stop below start");
    if (min_errors < 1) throw ConfigError("min-errors must be at least 1");
    if (batch < 1) throw ConfigError("batch must be at least 1");
    if (max_trials < min_trials) throw ConfigError("max-trials below min-trials");
    if (nr < 1) throw ConfigError("nr must be at least 1");
    switch (scheme) {
      case SchemeKind::TwoUser:
        if (n < nt) throw ConfigError("two-user scheme requires n >= nt");
        break;
      case SchemeKind::ThreeUser:
        if (n + 1 < 2 * nt) throw ConfigError("three-user scheme requires n >= 2 nt - 1");
        if (decoder == HarnessDecoder::Picgd)
          throw ConfigError("three-user scheme requires picgd-sic or ml-joint");
        break;
      default:
        throw ConfigError("unsupported scheme");
    }
    if (n < 2 || n > 6) throw ConfigError("n must be in 2..6 (rotation catalog)");
    (void)make_qam(mod_order);  // throws on unsupported order
  }

  std::size_t users() const { return scheme == SchemeKind::TwoUser ? 2 : 3; }
};

struct SimPoint {
  double ebn0_db = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;  // any-user codeword errors
  std::vector<std::uint64_t> per_user_errors;
  double cer = 0.0;
  std::vector<double> per_user_cer;
  double avg_visited_nodes = 0.0;
  double wall_seconds = 0.0;      // informational, excluded from determinism
  std::uint64_t degenerate = 0;   // resampled zero-probability channel draws
};

struct SimResult {
  SimConfig cfg;
  std::size_t K = 0;
  double rate = 0.0;
  std::vector<SimPoint> points;
};

namespace detail {

struct TrialAccum {
  std::uint64_t errors = 0;
  std::vector<std::uint64_t> user_errors;
  std::uint64_t visited = 0;
  std::uint64_t degenerate = 0;

  explicit TrialAccum(std::size_t k) : user_errors(k, 0) {}
  void merge(const TrialAccum& o) {
    errors += o.errors;
    for (std::size_t i = 0; i < user_errors.size(); ++i) user_errors[i] += o.user_errors[i];
    visited += o.visited;
    degenerate += o.degenerate;
  }
};

struct SweepContext {
  const SimConfig* cfg;
  MultiUserScheme scheme;
  QamConstellation constell;
  ChannelDims dims;
};

inline void run_one_trial(const SweepContext& ctx, std::size_t point_idx,
                          std::uint64_t trial_idx, double n0, TrialAccum& acc) {
  const SimConfig& cfg = *ctx.cfg;
  const std::size_t K = ctx.scheme.K;
  const std::size_t n = ctx.scheme.n;

  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt == 3)
      throw ConvergenceError("run_sweep: repeated singular channel draws");
    Rng rng(derive_seed(cfg.seed, point_idx, trial_idx, attempt));
    const ChannelRealization ch = sample_channel(ctx.dims, rng);

    std::vector<std::vector<std::uint32_t>> tx_idx(K, std::vector<std::uint32_t>(n));
    std::vector<CVector> tx_coeff(K);
    for (std::size_t k = 0; k < K; ++k) {
      CVector sym(n);
      for (std::size_t i = 0; i < n; ++i) {
        tx_idx[k][i] = rng.uniform_below(ctx.constell.order());
        sym[i] = ctx.constell.point(tx_idx[k][i]);
      }
      tx_coeff[k] = ctx.scheme.codes[k].rotation.apply(sym);
    }

    const EquivalentChannel eq = build_equivalent(ctx.scheme, ch);
    const CVector y = synthesize_rx(eq, tx_coeff, n0, rng);

    AllDecodeResult res;
    try {
      switch (cfg.decoder) {
        case HarnessDecoder::Picgd:
        case HarnessDecoder::PicgdSic: {
          const DecoderMode mode = cfg.decoder == HarnessDecoder::Picgd
                                       ? DecoderMode::Picgd
                                       : DecoderMode::PicgdSic;
          const GroupDecoder gd =
              build_group_decoder(ctx.scheme, eq, mode, cfg.sic_snr_order);
          res = decode_all(gd, eq, y, ctx.constell);
          break;
        }
        case HarnessDecoder::MlJoint:
          res = decode_ml_joint(eq, y, ctx.constell, cfg.ml_cap);
          break;
      }
    } catch (const SingularError&) {
      ++acc.degenerate;
      continue;  // re-draw with a new attempt salt
    }

    bool any = false;
    for (std::size_t k = 0; k < K; ++k) {
      if (res.user[k].sym != tx_idx[k]) {
        ++acc.user_errors[k];
        any = true;
      }
    }
    if (any) ++acc.errors;
    acc.visited += res.total_stats().visited_nodes;
    return;
  }
}

}  // namespace detail

// Sweep the configured Eb/N0 grid. Per point, trials run in fixed-size
// batches until the stop rule fires: at least min_trials, then stop as soon
// as min_errors errors are seen, hard cap at max_trials.
inline SimResult run_sweep(const SimConfig& cfg_in) {
  SimConfig cfg = cfg_in;
  cfg.validate();
  if (cfg.workers == 0) {
    cfg.workers = std::thread::hardware_concurrency();
    if (cfg.workers == 0) cfg.workers = 1;
  }

  detail::SweepContext ctx;
  const RotationMatrix rot = algebraic_rotation(cfg.n);
  ctx.scheme = cfg.scheme == SchemeKind::TwoUser ? two_user_scheme(cfg.nt, cfg.n, rot)
                                                 : three_user_scheme(cfg.nt, cfg.n, rot);
  if (!ctx.scheme.codes[0].rotation.certified)
    throw ConfigError("run_sweep: uncertified rotation");
  ctx.constell = make_qam(cfg.mod_order);
  ctx.cfg = &cfg;
  ctx.dims = {ctx.scheme.K, cfg.nt, cfg.nr};

  SimResult result;
  result.cfg = cfg_in;
  result.K = ctx.scheme.K;
  result.rate = ctx.scheme.rate();

  std::vector<double> grid;
  for (double e = cfg.ebn0_start; e <= cfg.ebn0_stop + 1e-9; e += cfg.ebn0_step)
    grid.push_back(e);

  for (std::size_t pi = 0; pi < grid.size(); ++pi) {
    const double ebn0 = grid[pi];
    const double n0 =
        noise_variance_for_ebn0(ebn0, ctx.scheme.rate(), ctx.constell.bits_per_symbol());
    const auto t0 = std::chrono::steady_clock::now();

    detail::TrialAccum total(ctx.scheme.K);
    std::uint64_t trials = 0;
    while (trials < cfg.max_trials) {
      const std::uint64_t todo = std::min<std::uint64_t>(cfg.batch, cfg.max_trials - trials);
      if (cfg.workers == 1) {
        for (std::uint64_t t = 0; t < todo; ++t)
          detail::run_one_trial(ctx, pi, trials + t, n0, total);
      } else {
        std::vector<detail::TrialAccum> accs(cfg.workers,
                                             detail::TrialAccum(ctx.scheme.K));
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errs(cfg.workers);
        for (unsigned w = 0; w < cfg.workers; ++w) {
          threads.emplace_back([&, w] {
            try {
              for (std::uint64_t t = w; t < todo; t += cfg.workers)
                detail::run_one_trial(ctx, pi, trials + t, n0, accs[w]);
            } catch (...) {
              errs[w] = std::current_exception();
            }
          });
        }
        for (auto& th : threads) th.join();
        for (unsigned w = 0; w < cfg.workers; ++w) {
          if (errs[w]) std::rethrow_exception(errs[w]);
          total.merge(accs[w]);
        }
      }
      trials += todo;
      if (trials >= cfg.min_trials && total.errors >= cfg.min_errors) break;
    }

    SimPoint pt;
    pt.ebn0_db = ebn0;
    pt.trials = trials;
    pt.errors = total.errors;
    pt.per_user_errors = total.user_errors;
    pt.cer = static_cast<double>(total.errors) / static_cast<double>(trials);
    for (std::uint64_t ue : total.user_errors)
      pt.per_user_cer.push_back(static_cast<double>(ue) / static_cast<double>(trials));
    pt.avg_visited_nodes =
        static_cast<double>(total.visited) / static_cast<double>(trials);
    pt.degenerate = total.degenerate;
    pt.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.points.push_back(std::move(pt));
  }
  return result;
}

// ---- CSV --------------------------------------------------------------------

inline void emit_csv(const SimResult& res, std::ostream& os) {
  os << "ebn0_db,trials,errors,cer";
  for (std::size_t k = 1; k <= res.K; ++k) os << ",cer_user" << k;
  os << ",avg_visited_nodes\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const SimPoint& p : res.points) {
    os << num(p.ebn0_db) << ',' << p.trials << ',' << p.errors << ',' << num(p.cer);
    for (double c : p.per_user_cer) os << ',' << num(c);
    os << ',' << num(p.avg_visited_nodes) << '\n';
  }
}

inline void emit_csv(const SimResult& res, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("emit_csv: cannot open " + path);
  emit_csv(res, os);
  if (!os.good()) throw IoError("emit_csv: write failed for " + path);
}

// Parse the numeric fields back (round-trip checks and plotting helpers).
inline SimResult parse_csv(std::istream& is) {
  SimResult res;
  std::string line;
  if (!std::getline(is, line)) throw IoError("parse_csv: empty input");
  std::size_t commas = 0;
  for (char c : line) commas += c == ',';
  if (commas < 5) throw IoError("parse_csv: malformed header");
  res.K = commas - 4;  // ebn0_db,trials,errors,cer,<K user columns>,avg_visited_nodes
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 5 + res.K) throw IoError("parse_csv: wrong column count");
    SimPoint p;
    p.ebn0_db = vals[0];
    p.trials = static_cast<std::uint64_t>(vals[1]);
    p.errors = static_cast<std::uint64_t>(vals[2]);
    p.cer = vals[3];
    for (std::size_t k = 0; k < res.K; ++k) p.per_user_cer.push_back(vals[4 + k]);
    p.avg_visited_nodes = vals[4 + res.K];
    res.points.push_back(std::move(p));
  }
  return res;
}

inline SimResult parse_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("parse_csv: cannot open " + path);
  return parse_csv(is);
}

// ---- plot script --------------------------------------------------------------

struct OverlaySeries {
  std::string path;
  std::string title;
  std::string y_column = "2";
};

// First "# series:" comment line of a fixture file, used as the legend label.
inline std::string overlay_title_from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("overlay: cannot open " + path);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("# series:", 0) == 0) {
      std::string t = line.substr(9);
      while (!t.empty() && t.front() == ' ') t.erase(t.begin());
      return t;
    }
    if (!line.empty() && line[0] != '#') break;
  }
  return path;
}

// Gnuplot script: simulated CER curve plus any reference overlays (external
// data shipped under data/fixtures, labelled as such).
inline void emit_plot_script(const SimResult& res, const std::string& csv_path,
                             const std::vector<OverlaySeries>& overlays,
                             std::ostream& os) {
  os << "# gnuplot script generated by icmac\n";
  os << "set datafile separator \",\"\n";
  os << "set logscale y\n";
  os << "set grid\n";
  os << "set xlabel \"Eb/N0 (dB)\"\n";
  os << "set ylabel \"CER\"\n";
  os << "set key bottom left\n";
  os << "plot \"" << csv_path << "\" every ::1 using 1:4 with linespoints lw 2 title \""
     << "simulated, K=" << res.K << " rate " << res.rate << "\"";
  for (const OverlaySeries& o : overlays)
    os << ", \\\n     \"" << o.path << "\" using 1:" << o.y_column
       << " with lines dashtype 2 title \"" << o.title << " [external data]\"";
  os << "\n";
}

inline void emit_plot_script(const SimResult& res, const std::string& csv_path,
                             const std::vector<OverlaySeries>& overlays,
                             const std::string& out_path) {
  std::ofstream os(out_path);
  if (!os) throw IoError("emit_plot_script: cannot open " + out_path);
  emit_plot_script(res, csv_path, overlays, os);
}

}  // namespace icmac
