// SPDX-License-Identifier: Apache-2.0
//
// icmac command line: Monte Carlo simulation sweeps, full-diversity
// verification of (possibly third-party) dispersion codes, dispersion-matrix
// export, and a quick self-test of the oracle equivalences.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 runtime or
// self-test failure, 4 I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icmac/channel.hpp"
#include "icmac/constellation.hpp"
#include "icmac/diversity.hpp"
#include "icmac/harness.hpp"
#include "icmac/json_codec.hpp"
#include "icmac/picgd.hpp"
#include "icmac/sphere.hpp"
#include "icmac/stbc.hpp"

namespace {

using namespace icmac;

unsigned parse_mod(const std::string& s) {
  if (s == "qpsk" || s == "4" || s == "4qam") return 4;
  if (s == "16qam" || s == "16") return 16;
  if (s == "32qam" || s == "32") return 32;
  if (s == "64qam" || s == "64") return 64;
  if (s == "256qam" || s == "256") return 256;
  if (s == "1024qam" || s == "1024") return 1024;
  throw ConfigError("unknown constellation: " + s);
}

SchemeKind parse_scheme(const std::string& s) {
  if (s == "two-user") return SchemeKind::TwoUser;
  if (s == "three-user") return SchemeKind::ThreeUser;
  throw ConfigError("unknown scheme: " + s);
}

// "start:step:stop" in dB
void parse_sweep(const std::string& s, SimConfig& cfg) {
  const std::size_t a = s.find(':');
  const std::size_t b = s.rfind(':');
  if (a == std::string::npos || b == a)
    throw ConfigError("ebn0 sweep must be start:step:stop");
  cfg.ebn0_start = std::stod(s.substr(0, a));
  cfg.ebn0_step = std::stod(s.substr(a + 1, b - a - 1));
  cfg.ebn0_stop = std::stod(s.substr(b + 1));
}

MultiUserScheme build_named_scheme(SchemeKind kind, std::size_t nt, std::size_t n,
                                   bool identity_rot) {
  const RotationMatrix rot = identity_rot ? identity_rotation(n) : algebraic_rotation(n);
  return kind == SchemeKind::TwoUser ? two_user_scheme(nt, n, rot)
                                     : three_user_scheme(nt, n, rot);
}

// Flat key=value config mirroring the simulate flags. Values from the file
// apply only where the command line did not set the same option, so the CLI
// always overrides the file. Unknown keys are configuration errors.
void apply_config_file(const std::string& path, const CLI::App* sim,
                       std::string& scheme_str, std::string& mod_str,
                       std::string& decoder_str, std::string& sweep_str,
                       std::string& sic_order, std::string& out_csv,
                       std::string& out_plot, std::vector<std::string>& overlays,
                       SimConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string s = raw;
    const std::size_t hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
    s.erase(0, start);
    if (s.empty()) continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = s.substr(0, eq);
    const std::string val = s.substr(eq + 1);
    const CLI::Option* opt = sim->get_option_no_throw("--" + key);
    if (key != "overlay" && opt != nullptr && opt->count() > 0) continue;  // CLI wins

    if (key == "scheme") scheme_str = val;
    else if (key == "nt") cfg.nt = std::stoul(val);
    else if (key == "n") cfg.n = std::stoul(val);
    else if (key == "nr") cfg.nr = std::stoul(val);
    else if (key == "mod") mod_str = val;
    else if (key == "decoder") decoder_str = val;
    else if (key == "ebn0") sweep_str = val;
    else if (key == "min-errors") cfg.min_errors = std::stoull(val);
    else if (key == "min-trials") cfg.min_trials = std::stoull(val);
    else if (key == "max-trials") cfg.max_trials = std::stoull(val);
    else if (key == "batch") cfg.batch = std::stoull(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "workers") cfg.workers = static_cast<unsigned>(std::stoul(val));
    else if (key == "ml-cap") cfg.ml_cap = std::stoull(val);
    else if (key == "sic-order") sic_order = val;
    else if (key == "out") { if (out_csv.empty()) out_csv = val; }
    else if (key == "plot") { if (out_plot.empty()) out_plot = val; }
    else if (key == "overlay") overlays.push_back(val);
    else throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key " + key);
  }
}

int cmd_simulate(const SimConfig& cfg, const std::string& out_csv,
                 const std::string& out_plot, const std::vector<std::string>& overlays) {
  const SimResult res = run_sweep(cfg);

  if (!out_csv.empty()) {
    emit_csv(res, out_csv);
    std::printf("wrote %s\n", out_csv.c_str());
  } else {
    emit_csv(res, std::cout);
  }
  for (const SimPoint& p : res.points) {
    std::printf("ebn0 %6.2f dB  trials %10llu  cer %.3e  avg nodes %.3f  (%.2fs)\n",
                p.ebn0_db, static_cast<unsigned long long>(p.trials), p.cer,
                p.avg_visited_nodes, p.wall_seconds);
    if (p.degenerate > 0)
      std::printf("  note: %llu degenerate channel draws resampled\n",
                  static_cast<unsigned long long>(p.degenerate));
  }
  // monotonicity sanity: violations flag under-sampling
  for (std::size_t i = 1; i < res.points.size(); ++i)
    if (res.points[i].cer > res.points[i - 1].cer && res.points[i].errors >= 100)
      std::fprintf(stderr, "warning: CER not monotone at %.2f dB (under-sampling?)\n",
                   res.points[i].ebn0_db);

  if (!out_plot.empty()) {
    std::vector<OverlaySeries> series;
    for (const std::string& path : overlays)
      series.push_back({path, overlay_title_from_file(path), "2"});
    emit_plot_script(res, out_csv.empty() ? "results.csv" : out_csv, series, out_plot);
    std::printf("wrote %s\n", out_plot.c_str());
  }
  return 0;
}

int cmd_export(SchemeKind kind, std::size_t nt, std::size_t n, bool identity_rot,
               const std::string& out) {
  const MultiUserScheme s = build_named_scheme(kind, nt, n, identity_rot);
  const json j = scheme_to_json(s);
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream os(out);
    if (!os) throw IoError("cannot open " + out);
    os << j.dump(2) << '\n';
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

int cmd_verify(const std::string& code_path, unsigned mod_order, std::uint64_t channels,
               std::uint64_t differences, const std::string& mode_str,
               std::uint64_t ml_cap, std::uint64_t seed, const std::string& out) {
  std::ifstream is(code_path);
  if (!is) throw IoError("cannot open " + code_path);
  json cj;
  is >> cj;
  const MultiUserScheme scheme = scheme_from_json(cj);
  const QamConstellation constell = make_qam(mod_order);
  const DecoderMode mode = mode_str == "sic" ? DecoderMode::PicgdSic : DecoderMode::Picgd;

  const RankReport ml = check_ml_full_diversity(scheme, constell, ml_cap, seed);
  const RankReport th = check_rank_additivity(scheme, constell, channels, differences, mode, seed);

  json j;
  j["code"] = code_path;
  j["rotation_certified"] = scheme.codes[0].rotation.certified;
  j["ml_full_diversity"] = rank_report_to_json(ml);
  j["rank_additivity"] = rank_report_to_json(th);
  const bool pass = ml.failures == 0 && th.failures == 0;
  j["pass"] = pass;
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream os(out);
    if (!os) throw IoError("cannot open " + out);
    os << j.dump(2) << '\n';
    std::printf("wrote %s\n", out.c_str());
  }
  return pass ? 0 : 3;
}

int cmd_selftest() {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };

  // rotations certify
  {
    bool ok = true;
    for (std::size_t n = 2; n <= 6; ++n) ok = ok && algebraic_rotation(n).certified;
    report("algebraic rotations certified (product distance > 0)", ok);
  }

  // sphere vs exhaustive
  {
    Rng rng(1001);
    bool ok = true;
    for (int t = 0; t < 500 && ok; ++t) {
      LatticeProblem p;
      p.n = 1 + rng.uniform_below(4);
      p.r.assign(p.n * p.n, 0.0);
      p.z.resize(p.n);
      p.alphabets.assign(p.n, {-3.0, -1.0, 1.0, 3.0});
      for (std::size_t i = 0; i < p.n; ++i) {
        for (std::size_t j = i; j < p.n; ++j)
          p.r[i * p.n + j] = 2.0 * rng.uniform01() - 1.0;
        p.r[i * p.n + i] = 0.2 + rng.uniform01();
        p.z[i] = 6.0 * (rng.uniform01() - 0.5);
      }
      ok = sphere_search(p).idx == exhaustive_search(p).idx;
    }
    report("sphere search equals exhaustive oracle (500 instances)", ok);
  }

  // decoupled vs joint, two-user
  {
    Rng rng(1002);
    const QamConstellation qpsk = make_qam(4);
    const MultiUserScheme s = two_user_scheme(2, 3, algebraic_rotation(3));
    const double n0 = noise_variance_for_ebn0(10.0, s.rate(), 2);
    bool ok = true;
    for (int t = 0; t < 200 && ok; ++t) {
      const ChannelRealization ch = sample_channel({2, 2, 1}, rng);
      const EquivalentChannel eq = build_equivalent(s, ch);
      std::vector<CVector> sym(2, CVector(3));
      for (auto& v : sym)
        for (auto& x : v) x = qpsk.point(rng.uniform_below(4));
      const CVector y = synthesize_rx(eq, sym, n0, rng);
      const GroupDecoder gd = build_group_decoder(s, eq, DecoderMode::Picgd);
      for (std::size_t l = 0; l < 2 && ok; ++l)
        ok = decode_decoupled(gd, l, y, qpsk).sym == decode_joint(gd, l, y, qpsk).sym;
    }
    report("decoupled decoder equals joint oracle, two-user (200 trials)", ok);
  }

  // decoupled vs joint under SIC, three-user
  {
    Rng rng(1003);
    const QamConstellation qpsk = make_qam(4);
    const MultiUserScheme s = three_user_scheme(2, 3, algebraic_rotation(3));
    const double n0 = noise_variance_for_ebn0(10.0, s.rate(), 2);
    bool ok = true;
    for (int t = 0; t < 100 && ok; ++t) {
      const ChannelRealization ch = sample_channel({3, 2, 1}, rng);
      const EquivalentChannel eq = build_equivalent(s, ch);
      std::vector<CVector> sym(3, CVector(3));
      for (auto& v : sym)
        for (auto& x : v) x = qpsk.point(rng.uniform_below(4));
      const CVector y = synthesize_rx(eq, sym, n0, rng);
      const GroupDecoder gd = build_group_decoder(s, eq, DecoderMode::PicgdSic);
      const AllDecodeResult a = decode_all(gd, eq, y, qpsk, false);
      const AllDecodeResult b = decode_all(gd, eq, y, qpsk, true);
      for (std::size_t l = 0; l < 3 && ok; ++l) ok = a.user[l].sym == b.user[l].sym;
    }
    report("decoupled decoder equals joint oracle, three-user SIC (100 trials)", ok);
  }

  // structural identity: channel block equals dispersion product
  {
    Rng rng(1004);
    bool ok = true;
    for (std::size_t nt = 1; nt <= 4 && ok; ++nt)
      for (std::size_t n = nt; n <= 8 && ok; ++n) {
        CVector h(nt);
        for (auto& x : h) x = cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
        const CMatrix direct = channel_block(h, n);
        const std::vector<CMatrix> disp = extract_dispersion(
            [&](const CVector& e) { return build_code_block(e, nt); }, n);
        CMatrix stacked(n + nt - 1, n);
        for (std::size_t i = 0; i < n; ++i) stacked.set_col(i, disp[i] * h);
        ok = (direct - stacked).max_abs() <= 1e-13;
      }
    report("channel block matches dispersion-matrix product (nt<=4, n<=8)", ok);
  }

  // rank criteria, small budget
  {
    const QamConstellation qpsk = make_qam(4);
    const RankReport ml =
        check_ml_full_diversity(two_user_scheme(2, 3, algebraic_rotation(3)), qpsk);
    const RankReport th = check_rank_additivity(
        three_user_scheme(2, 3, algebraic_rotation(3)), qpsk, 25, 25, DecoderMode::PicgdSic);
    report("full-diversity rank checks (exhaustive differences / 25x25 sampled)",
           ml.failures == 0 && th.failures == 0);
  }

  std::printf("%s\n", failures == 0 ? "selftest: all suites passed"
                                    : "selftest: FAILURES present");
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-user interference-cancellation STBC simulator"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo CER sweep");
  std::string scheme_str = "two-user", mod_str = "qpsk", decoder_str = "picgd";
  std::string sweep_str = "0:5:40", out_csv, out_plot, sic_order = "fixed", config_path;
  std::vector<std::string> overlays;
  SimConfig cfg;
  sim->add_option("--config", config_path, "key=value config file (CLI overrides file)");
  sim->add_option("--scheme", scheme_str, "two-user | three-user");
  sim->add_option("--nt", cfg.nt, "transmit antennas per user");
  sim->add_option("--n", cfg.n, "symbols per codeword (2..6)");
  sim->add_option("--nr", cfg.nr, "receive antennas");
  sim->add_option("--mod", mod_str, "qpsk | 16qam | 32qam | 64qam | 256qam | 1024qam");
  sim->add_option("--decoder", decoder_str, "picgd | picgd-sic | ml-joint");
  sim->add_option("--ebn0", sweep_str, "Eb/N0 sweep start:step:stop in dB");
  sim->add_option("--min-errors", cfg.min_errors, "stop rule: errors per point");
  sim->add_option("--min-trials", cfg.min_trials, "floor on trials per point");
  sim->add_option("--max-trials", cfg.max_trials, "cap on trials per point");
  sim->add_option("--batch", cfg.batch, "trials per scheduling batch");
  sim->add_option("--seed", cfg.seed, "master seed");
  sim->add_option("--workers", cfg.workers, "worker threads (0 = hardware)");
  sim->add_option("--ml-cap", cfg.ml_cap, "candidate cap for the ml-joint decoder");
  sim->add_option("--sic-order", sic_order, "fixed | snr (SIC decode order)");
  sim->add_option("--out", out_csv, "output CSV path (default stdout)");
  sim->add_option("--plot", out_plot, "write a gnuplot script here");
  sim->add_option("--overlay", overlays, "fixture CSV(s) to overlay in the plot");

  // verify
  auto* ver = app.add_subcommand("verify", "full-diversity rank checks on a code export");
  std::string code_path, ver_mod = "qpsk", ver_mode = "picgd", ver_out;
  std::uint64_t ver_trials = 200, ver_diffs = 200, ver_cap = 100000, ver_seed = 99;
  ver->add_option("--code", code_path, "code JSON (see export-code)")->required();
  ver->add_option("--constellation", ver_mod, "constellation for difference enumeration");
  ver->add_option("--trials", ver_trials, "random channels per user");
  ver->add_option("--differences", ver_diffs, "sampled differences per channel");
  ver->add_option("--mode", ver_mode, "picgd | sic (interference set)");
  ver->add_option("--ml-cap", ver_cap, "exhaustive-enumeration cap for ML check");
  ver->add_option("--seed", ver_seed, "sampling seed");
  ver->add_option("--out", ver_out, "report JSON path (default stdout)");

  // export-code
  auto* exp = app.add_subcommand("export-code", "emit a scheme's dispersion matrices as JSON");
  std::string exp_scheme = "two-user", exp_out;
  std::size_t exp_nt = 2, exp_n = 3;
  bool exp_identity = false;
  exp->add_option("--scheme", exp_scheme, "two-user | three-user");
  exp->add_option("--nt", exp_nt, "transmit antennas per user");
  exp->add_option("--n", exp_n, "symbols per codeword (2..6)");
  exp->add_flag("--identity-rotation", exp_identity,
                "structural-test rotation (uncertified, fails verification)");
  exp->add_option("--out", exp_out, "output path (default stdout)");

  // selftest
  app.add_subcommand("selftest", "run the oracle-equivalence suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      if (!config_path.empty())
        apply_config_file(config_path, sim, scheme_str, mod_str, decoder_str, sweep_str,
                          sic_order, out_csv, out_plot, overlays, cfg);
      cfg.scheme = parse_scheme(scheme_str);
      cfg.mod_order = parse_mod(mod_str);
      if (decoder_str == "picgd")
        cfg.decoder = HarnessDecoder::Picgd;
      else if (decoder_str == "picgd-sic")
        cfg.decoder = HarnessDecoder::PicgdSic;
      else if (decoder_str == "ml-joint")
        cfg.decoder = HarnessDecoder::MlJoint;
      else
        throw ConfigError("unknown decoder: " + decoder_str);
      if (sic_order == "snr")
        cfg.sic_snr_order = true;
      else if (sic_order != "fixed")
        throw ConfigError("unknown sic order: " + sic_order);
      parse_sweep(sweep_str, cfg);
      return cmd_simulate(cfg, out_csv, out_plot, overlays);
    }
    if (ver->parsed())
      return cmd_verify(code_path, parse_mod(ver_mod), ver_trials, ver_diffs, ver_mode,
                        ver_cap, ver_seed, ver_out);
    if (exp->parsed())
      return cmd_export(parse_scheme(exp_scheme), exp_nt, exp_n, exp_identity, exp_out);
    return cmd_selftest();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
