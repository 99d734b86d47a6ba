// infospec command-line front end: loads model files, runs the exponent /
// spectrum / bound-verification / simulation machinery, writes CSV or JSON.
//
// Exit codes: 0 success, 1 validation error, 2 capacity error, 3 a verify
// subcommand found a violated bound, 64 usage error.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "infospec/codingsim.hpp"
#include "infospec/exponents.hpp"
#include "infospec/models.hpp"
#include "infospec/parallel.hpp"
#include "infospec/spectrum.hpp"

namespace {

using namespace infospec;

std::string f12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct CommandSpec {
  std::vector<std::string> models;
  std::string out;
  std::string units = "nats";
  int workers = 0;
  int n = 1;
  int grid = 0;
  std::vector<double> thresholds;
  std::vector<double> rates;
  std::optional<double> rho;
  std::string kind = "information";
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t bin_seed = 0;
  std::uint64_t codebooks = 100;
  std::uint64_t transmissions = 500;
  bool optimize_input = false;
};

struct LoadedFile {
  std::string path;
  std::string hash;
  AnyModel model;
};

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LoadedFile load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw InputError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  return {path, fnv1a64_hex(text), parse_model_json(text)};
}

const SourceModel& as_source(const LoadedFile& f) {
  if (auto* m = std::get_if<SourceModel>(&f.model)) return *m;
  throw InputError(f.path + ": expected a source model");
}
const ChannelModel& as_channel(const LoadedFile& f) {
  if (auto* m = std::get_if<ChannelModel>(&f.model)) return *m;
  throw InputError(f.path + ": expected a channel model");
}
const JointSourceModel& as_joint(const LoadedFile& f) {
  if (auto* m = std::get_if<JointSourceModel>(&f.model)) return *m;
  throw InputError(f.path + ": expected a joint model");
}

struct UnitCtx {
  bool bits = false;
  double to_nats(double v) const { return bits ? v * kLn2 : v; }
  double display(double v) const { return bits ? v / kLn2 : v; }
  const char* name() const { return bits ? "bits" : "nats"; }
};

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw InputError("cannot open output file: " + path);
  out << content;
}

std::string echo_header(const std::string& cmd,
                        const std::vector<LoadedFile>& files,
                        const std::string& params) {
  std::string s = "# infospec " + cmd + "\n";
  for (const auto& f : files)
    s += "# model " + f.path + " fnv1a64=" + f.hash + "\n";
  s += "# " + params + "\n";
  return s;
}

std::string json_escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string json_models(const std::vector<LoadedFile>& files) {
  std::string s = "[";
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (i) s += ", ";
    s += "{\"path\": \"" + json_escape(files[i].path) + "\", \"fnv1a64\": \"" +
         files[i].hash + "\"}";
  }
  return s + "]";
}

std::vector<double> expand_grid(std::vector<double> vals, int grid,
                                const char* what) {
  if (grid > 0) {
    if (vals.size() != 2)
      throw InputError(std::string(what) +
                       ": --grid expansion needs exactly two endpoint values");
    if (grid < 2) throw InputError("--grid must be >= 2");
    std::vector<double> out(grid);
    for (int i = 0; i < grid; ++i)
      out[i] = vals[0] + (vals[1] - vals[0]) * i / (grid - 1);
    return out;
  }
  if (vals.empty())
    throw InputError(std::string(what) + ": no values supplied");
  return vals;
}

std::string bound_report_json(const BoundReport& r, const UnitCtx& u) {
  std::string s = "{";
  s += "\"n\": " + std::to_string(r.n);
  s += ", \"threshold\": " + f12(u.display(r.threshold));
  s += ", \"epsilon_n\": " + f12(r.epsilon_n);
  s += ", \"rho_n\": " + f12(r.rho_n);
  s += ", \"lhs\": " + f12(u.display(r.lhs));
  s += ", \"rhs\": " + f12(u.display(r.rhs));
  s += ", \"slack\": " + f12(u.display(r.slack));
  s += std::string(", \"holds\": ") + (r.holds ? "true" : "false");
  return s + "}";
}

int run_verify(const CommandSpec& opt, bool theorem1) {
  std::vector<LoadedFile> files;
  for (const auto& p : opt.models) files.push_back(load_file(p));
  std::vector<double> ts = expand_grid(opt.thresholds, opt.grid, "verify");
  UnitCtx u{opt.units == "bits"};
  std::vector<BoundReport> reports;
  bool all_hold = true;
  for (double t : ts) {
    BoundReport r;
    if (theorem1) {
      if (files.size() != 2)
        throw InputError("verify-t1 needs --model source --model channel");
      r = verify_theorem1(as_source(files[0]), as_channel(files[1]), opt.n,
                          Rate(u.to_nats(t)), opt.workers);
    } else {
      if (files.size() != 1)
        throw InputError("verify-t2 needs --model joint");
      r = verify_theorem2(as_joint(files[0]), opt.n, Rate(u.to_nats(t)),
                          opt.workers);
    }
    all_hold = all_hold && r.holds;
    reports.push_back(r);
  }
  std::string s = "{\n";
  s += "  \"command\": \"" + std::string(theorem1 ? "verify-t1" : "verify-t2") +
       "\",\n";
  s += "  \"models\": " + json_models(files) + ",\n";
  s += "  \"n\": " + std::to_string(opt.n) + ",\n";
  s += "  \"units\": \"" + std::string(u.name()) + "\",\n";
  s += "  \"reports\": [\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    s += "    " + bound_report_json(reports[i], u);
    s += i + 1 < reports.size() ? ",\n" : "\n";
  }
  s += "  ],\n";
  s += std::string("  \"all_hold\": ") + (all_hold ? "true" : "false") + "\n";
  s += "}\n";
  write_output(opt.out, s);
  return all_hold ? 0 : 3;
}

std::string curve_csv(const ExponentCurve& curve, const UnitCtx& u,
                      const std::string& param_col,
                      const std::string& value_col, bool convert_param) {
  std::string s = param_col + "," + value_col + "\n";
  double prev = -kPosInf;
  for (const auto& [p, v] : curve.points) {
    if (!(p > prev)) throw InputError("curve parameters must increase");
    prev = p;
    s += f12(convert_param ? u.display(p) : p) + "," + f12(u.display(v)) +
         "\n";
  }
  return s;
}

int run_curve(const CommandSpec& opt, bool e0) {
  std::vector<LoadedFile> files;
  for (const auto& p : opt.models) files.push_back(load_file(p));
  UnitCtx u{opt.units == "bits"};
  int g = opt.grid > 0 ? opt.grid : 33;
  if (g < 2) throw InputError("--grid must be >= 2");
  ExponentCurve curve;
  curve.model_id = files[0].path;
  curve.n = opt.n;
  for (int i = 0; i < g; ++i) {
    double rho = static_cast<double>(i) / (g - 1);
    double v;
    if (e0) {
      if (files.size() != 2)
        throw InputError("e0-curve needs --model source --model channel");
      v = gallager_e0(as_source(files[0]), as_channel(files[1]), opt.n,
                      Rho(rho), opt.workers);
    } else {
      if (files.size() != 1) throw InputError("j0-curve needs --model joint");
      v = source_j0(as_joint(files[0]), opt.n, Rho(rho), opt.workers);
    }
    curve.points.push_back({rho, v});
  }
  std::string params = "n=" + std::to_string(opt.n) +
                       " grid=" + std::to_string(g) + " units=" + u.name();
  std::string s = echo_header(e0 ? "e0-curve" : "j0-curve", files, params);
  s += curve_csv(curve, u, "rho",
                 std::string(e0 ? "e0_" : "j0_") + u.name(), false);
  write_output(opt.out, s);
  return 0;
}

int run_exponent(const CommandSpec& opt) {
  std::vector<LoadedFile> files;
  for (const auto& p : opt.models) files.push_back(load_file(p));
  UnitCtx u{opt.units == "bits"};
  std::vector<double> rates = expand_grid(opt.rates, opt.grid, "exponent");
  int g = 33;
  std::string params = "n=" + std::to_string(opt.n) +
                       " rho_grid=" + std::to_string(g) +
                       " units=" + u.name();
  if (opt.optimize_input) params += " optimize_input=1";
  ExponentCurve curve;
  curve.model_id = files[0].path;
  curve.n = opt.n;
  std::vector<double> argmaxes;
  for (double rr : rates) {
    Rate R(u.to_nats(rr));
    ExponentPoint pt;
    if (files.size() == 2) {
      if (opt.optimize_input)
        pt = channel_exponent_optimized(as_channel(files[1]), opt.n, R, g,
                                        opt.workers);
      else
        pt = channel_exponent(as_source(files[0]), as_channel(files[1]), opt.n,
                              R, g, opt.workers);
    } else if (files.size() == 1) {
      pt = source_exponent(as_joint(files[0]), opt.n, R, g, opt.workers);
    } else {
      throw InputError("exponent needs one joint model or source + channel");
    }
    curve.points.push_back({R.value, pt.exponent});
    argmaxes.push_back(pt.argmax.value);
  }
  std::string s = echo_header("exponent", files, params);
  s += std::string("rate_") + u.name() + ",exponent_" + u.name() +
       ",argmax_rho\n";
  double prev = -kPosInf;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    auto [R, v] = curve.points[i];
    if (!(R > prev)) throw InputError("rates must be strictly increasing");
    prev = R;
    s += f12(u.display(R)) + "," + f12(u.display(v)) + "," +
         f12(argmaxes[i]) + "\n";
  }
  write_output(opt.out, s);
  return 0;
}

int run_spectrum(const CommandSpec& opt) {
  std::vector<LoadedFile> files;
  for (const auto& p : opt.models) files.push_back(load_file(p));
  UnitCtx u{opt.units == "bits"};
  DensityKind kind;
  if (opt.kind == "information")
    kind = DensityKind::Information;
  else if (opt.kind == "entropy")
    kind = DensityKind::Entropy;
  else
    throw InputError("--kind must be information or entropy");
  SpectrumCdf cdf;
  const bool mc = opt.samples > 0;
  if (files.size() == 2) {
    const auto& src = as_source(files[0]);
    const auto& chan = as_channel(files[1]);
    if (kind == DensityKind::Information) {
      cdf = mc ? monte_carlo_spectrum(src, chan, opt.n, opt.samples, opt.seed,
                                      opt.workers)
               : exact_spectrum(src, chan, opt.n, opt.workers);
    } else {
      JointSourceModel joint = induce_joint(src, chan);
      cdf = mc ? monte_carlo_spectrum(joint, opt.n, kind, opt.samples,
                                      opt.seed, opt.workers)
               : exact_spectrum(joint, opt.n, kind, opt.workers);
    }
  } else if (files.size() == 1) {
    const auto& joint = as_joint(files[0]);
    cdf = mc ? monte_carlo_spectrum(joint, opt.n, kind, opt.samples, opt.seed,
                                    opt.workers)
             : exact_spectrum(joint, opt.n, kind, opt.workers);
  } else {
    throw InputError("spectrum needs one joint model or source + channel");
  }
  std::string params =
      "n=" + std::to_string(opt.n) + " kind=" + opt.kind +
      " mode=" + (mc ? "monte-carlo" : "exact") +
      " seed=" + std::to_string(opt.seed) +
      " samples=" + std::to_string(mc ? opt.samples : 0) +
      " units=" + u.name();
  std::string s = echo_header("spectrum", files, params);
  if (mc) {
    s += "sample_value\n";
    for (double v : cdf.samples) s += f12(u.display(v)) + "\n";
  } else {
    s += std::string("value_") + u.name() + ",mass\n";
    for (const auto& a : cdf.atoms)
      s += f12(u.display(a.value)) + "," + f12(a.mass) + "\n";
  }
  write_output(opt.out, s);
  return 0;
}

int run_tilted(const CommandSpec& opt) {
  std::vector<LoadedFile> files;
  for (const auto& p : opt.models) files.push_back(load_file(p));
  if (files.size() != 1) throw InputError("tilted needs --model joint");
  const auto& joint = as_joint(files[0]);
  UnitCtx u{opt.units == "bits"};
  if (opt.rho.has_value()) {
    TiltedJoint t = tilted_joint(joint, opt.n, Rho(*opt.rho));
    double j0 = t.log_normalizer / opt.n;
    double d = t.conditional_entropy_rate();
    std::string params = "n=" + std::to_string(opt.n) +
                         " rho=" + f12(*opt.rho) + " j0_" + u.name() + "=" +
                         f12(u.display(j0)) + " derivative_" + u.name() + "=" +
                         f12(u.display(d)) + " units=" + u.name();
    std::string s = echo_header("tilted", files, params);
    s += "x_rank,y_rank,log_mass_nats\n";
    std::vector<int> xn(opt.n), yn(opt.n);
    const std::uint64_t xt = pow_u64(joint.x.size, opt.n);
    const std::uint64_t yt = pow_u64(joint.y.size, opt.n);
    for (std::uint64_t xr = 0; xr < xt; ++xr) {
      sequence_unrank(xr, joint.x.size, xn);
      for (std::uint64_t yr = 0; yr < yt; ++yr) {
        sequence_unrank(yr, joint.y.size, yn);
        s += std::to_string(xr) + "," + std::to_string(yr) + "," +
             f12(t.log_mass(xn, yn)) + "\n";
      }
    }
    write_output(opt.out, s);
    return 0;
  }
  int g = opt.grid > 0 ? opt.grid : 33;
  if (g < 2) throw InputError("--grid must be >= 2");
  std::string params = "n=" + std::to_string(opt.n) +
                       " grid=" + std::to_string(g) + " units=" + u.name();
  std::string s = echo_header("tilted", files, params);
  s += std::string("rho,j0_") + u.name() + ",derivative_" + u.name() + "\n";
  for (int i = 0; i < g; ++i) {
    double rho = static_cast<double>(i) / (g - 1);
    TiltedJoint t = tilted_joint(joint, opt.n, Rho(rho));
    s += f12(rho) + "," + f12(u.display(t.log_normalizer / opt.n)) + "," +
         f12(u.display(t.conditional_entropy_rate())) + "\n";
  }
  write_output(opt.out, s);
  return 0;
}

int run_sim_channel(const CommandSpec& opt) {
  std::vector<LoadedFile> files;
  for (const auto& p : opt.models) files.push_back(load_file(p));
  if (files.size() != 2)
    throw InputError("sim-channel needs --model source --model channel");
  UnitCtx u{opt.units == "bits"};
  if (opt.rates.size() != 1)
    throw InputError("sim-channel needs exactly one --rate");
  ChannelSimConfig cfg;
  cfg.input = as_source(files[0]);
  cfg.channel = as_channel(files[1]);
  cfg.n = opt.n;
  cfg.rate = Rate(u.to_nats(opt.rates[0]));
  cfg.codebooks = opt.codebooks;
  cfg.transmissions = opt.transmissions;
  cfg.seed = opt.seed;
  SimResult r = simulate_channel_code(cfg, opt.workers);
  std::string s = "{\n";
  s += "  \"command\": \"sim-channel\",\n";
  s += "  \"models\": " + json_models(files) + ",\n";
  s += "  \"n\": " + std::to_string(opt.n) + ",\n";
  s += "  \"rate_" + std::string(u.name()) + "\": " + f12(opt.rates[0]) + ",\n";
  s += "  \"codebooks\": " + std::to_string(opt.codebooks) + ",\n";
  s += "  \"transmissions\": " + std::to_string(opt.transmissions) + ",\n";
  s += "  \"seed\": " + std::to_string(opt.seed) + ",\n";
  s += "  \"trials\": " + std::to_string(r.trials) + ",\n";
  s += "  \"empirical_error\": " + f12(r.empirical_error) + ",\n";
  s += "  \"ci_halfwidth\": " + f12(r.ci_halfwidth) + ",\n";
  s += "  \"analytic_bound\": " + f12(r.analytic_bound) + ",\n";
  s += std::string("  \"bound_satisfied_within_ci\": ") +
       (r.bound_satisfied_within_ci ? "true" : "false") + "\n";
  s += "}\n";
  write_output(opt.out, s);
  return 0;
}

int run_sim_sw(const CommandSpec& opt) {
  std::vector<LoadedFile> files;
  for (const auto& p : opt.models) files.push_back(load_file(p));
  if (files.size() != 1) throw InputError("sim-sw needs --model joint");
  UnitCtx u{opt.units == "bits"};
  if (opt.rates.size() != 1) throw InputError("sim-sw needs exactly one --rate");
  std::uint64_t trials = opt.samples > 0 ? opt.samples : 10000;
  SimResult r =
      simulate_slepian_wolf(as_joint(files[0]), opt.n,
                            Rate(u.to_nats(opt.rates[0])), opt.bin_seed,
                            trials, opt.seed, opt.workers);
  std::string s = "{\n";
  s += "  \"command\": \"sim-sw\",\n";
  s += "  \"models\": " + json_models(files) + ",\n";
  s += "  \"n\": " + std::to_string(opt.n) + ",\n";
  s += "  \"rate_" + std::string(u.name()) + "\": " + f12(opt.rates[0]) + ",\n";
  s += "  \"trials\": " + std::to_string(r.trials) + ",\n";
  s += "  \"seed\": " + std::to_string(opt.seed) + ",\n";
  s += "  \"bin_seed\": " + std::to_string(opt.bin_seed) + ",\n";
  s += "  \"empirical_error\": " + f12(r.empirical_error) + ",\n";
  s += "  \"ci_halfwidth\": " + f12(r.ci_halfwidth) + ",\n";
  s += "  \"analytic_reference\": " + f12(r.analytic_bound) + ",\n";
  s += std::string("  \"reference_satisfied_within_ci\": ") +
       (r.bound_satisfied_within_ci ? "true" : "false") + "\n";
  s += "}\n";
  write_output(opt.out, s);
  return 0;
}

void add_common(CLI::App* cmd, CommandSpec& opt, bool needs_n = true) {
  cmd->add_option("--model", opt.models, "model file (repeatable)")
      ->required();
  cmd->add_option("--out", opt.out, "output path (default stdout)");
  cmd->add_option("--units", opt.units, "nats|bits")
      ->check(CLI::IsMember({"nats", "bits"}));
  cmd->add_option("--workers", opt.workers,
                  "worker threads (0 = machine parallelism)");
  if (needs_n) cmd->add_option("--n", opt.n, "blocklength")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"error exponents and information spectra for finite-alphabet "
               "sources and channels"};
  app.require_subcommand(1);
  CommandSpec opt;

  CLI::App* e0c = app.add_subcommand("e0-curve", "E0(rho) over a rho grid");
  add_common(e0c, opt);
  e0c->add_option("--grid", opt.grid, "number of rho points (default 33)");

  CLI::App* j0c = app.add_subcommand("j0-curve", "J0(rho) over a rho grid");
  add_common(j0c, opt);
  j0c->add_option("--grid", opt.grid, "number of rho points (default 33)");

  CLI::App* expc = app.add_subcommand(
      "exponent", "E(R) for source+channel models or J(R) for a joint model");
  add_common(expc, opt);
  expc->add_option("--rate", opt.rates, "rate (repeatable, or two + --grid)")
      ->required();
  expc->add_option("--grid", opt.grid, "expand two rates to a linear grid");
  expc->add_flag("--optimize-input", opt.optimize_input,
                 "coordinate-ascent over i.i.d. inputs (channel side)");

  CLI::App* spc = app.add_subcommand("spectrum",
                                     "exact or Monte Carlo density CDF export");
  add_common(spc, opt);
  spc->add_option("--kind", opt.kind, "information|entropy")
      ->check(CLI::IsMember({"information", "entropy"}));
  spc->add_option("--samples", opt.samples,
                  "Monte Carlo sample count (0 = exact)");
  spc->add_option("--seed", opt.seed, "Monte Carlo seed");

  CLI::App* v1 = app.add_subcommand("verify-t1",
                                    "channel-side bound over a threshold grid");
  add_common(v1, opt);
  v1->add_option("--threshold", opt.thresholds,
                 "threshold (repeatable, or two + --grid)")
      ->required();
  v1->add_option("--grid", opt.grid, "expand two thresholds to a grid");

  CLI::App* v2 = app.add_subcommand("verify-t2",
                                    "source-side bound over a threshold grid");
  add_common(v2, opt);
  v2->add_option("--threshold", opt.thresholds,
                 "threshold (repeatable, or two + --grid)")
      ->required();
  v2->add_option("--grid", opt.grid, "expand two thresholds to a grid");

  CLI::App* tl = app.add_subcommand(
      "tilted", "tilted joint: rho table, or full distribution at --rho");
  add_common(tl, opt);
  tl->add_option("--rho", opt.rho, "dump the tilted distribution at this rho");
  tl->add_option("--grid", opt.grid, "number of rho points (default 33)");

  CLI::App* simc = app.add_subcommand("sim-channel",
                                      "random-code ML decoding experiment");
  add_common(simc, opt);
  simc->add_option("--rate", opt.rates, "code rate")->required();
  simc->add_option("--codebooks", opt.codebooks, "codebook count");
  simc->add_option("--transmissions", opt.transmissions,
                   "transmissions per codebook");
  simc->add_option("--seed", opt.seed, "simulation seed");

  CLI::App* simsw = app.add_subcommand(
      "sim-sw", "random-binning MAP decoding experiment");
  add_common(simsw, opt);
  simsw->add_option("--rate", opt.rates, "binning rate")->required();
  simsw->add_option("--samples", opt.samples, "trial count (default 10000)");
  simsw->add_option("--seed", opt.seed, "simulation seed");
  simsw->add_option("--bin-seed", opt.bin_seed, "bin-assignment seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  if (opt.workers <= 0) opt.workers = default_workers();

  try {
    if (e0c->parsed()) return run_curve(opt, true);
    if (j0c->parsed()) return run_curve(opt, false);
    if (expc->parsed()) return run_exponent(opt);
    if (spc->parsed()) return run_spectrum(opt);
    if (v1->parsed()) return run_verify(opt, true);
    if (v2->parsed()) return run_verify(opt, false);
    if (tl->parsed()) return run_tilted(opt);
    if (simc->parsed()) return run_sim_channel(opt);
    if (simsw->parsed()) return run_sim_sw(opt);
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}
