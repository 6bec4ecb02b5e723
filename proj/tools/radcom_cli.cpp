// SPDX-License-Identifier: Apache-2.0
// radcom: run, sweep and re-evaluate RadCom precoder designs.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "radcom/admm.hpp"
#include "radcom/config_io.hpp"
#include "radcom/experiments.hpp"
#include "radcom/matrix_io.hpp"
#include "radcom/model.hpp"
#include "radcom/bse_solver.hpp"

namespace fs = std::filesystem;
using namespace radcom;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNotConverged = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = "radcom_out";
  std::optional<std::uint64_t> seed;
  bool dump_conic = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "JSON config or run manifest (defaults if omitted)");
  app->add_option("--set", o.sets, "Override a config field, key=value (repeatable)");
  app->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app->add_option("--seed", o.seed, "Master seed (same as --set system.seed=N)");
  app->add_flag("--dump-conic-failures", o.dump_conic,
                "Write failed conic problems as JSON into <out>/conic_failures");
}

class Session {
 public:
  Session(const CommonOptions& o, std::string command) : opts_(o) {
    manifest_.command = std::move(command);
    for (const std::string& s : o.sets) manifest_.overrides.push_back(parse_override(s));
    if (o.seed)
      manifest_.overrides.push_back(parse_override("system.seed=" + std::to_string(*o.seed)));
    nlohmann::json doc = opts_.config_path.empty()
                             ? nlohmann::json{{"schema_version", kConfigSchemaVersion}}
                             : read_config_document(opts_.config_path);
    apply_overrides(doc, manifest_.overrides);
    manifest_.config = config_from_json(doc);
    fs::create_directories(o.out_dir);
    out_ = fs::absolute(o.out_dir).lexically_normal();
    if (o.dump_conic) {
      const fs::path dump = out_ / "conic_failures";
      fs::create_directories(dump);
      manifest_.config.solver.conic_dump_dir = dump.string();
    }
    manifest_.created_utc = utc_timestamp();
    manifest_.status = "running";
  }

  Config& config() { return manifest_.config; }
  fs::path path(const std::string& name) const { return out_ / name; }

  void plan_output(const fs::path& p) { manifest_.outputs.push_back(p.string()); }

  void write_manifest() {
    const fs::path p = path("manifest.json");
    std::ofstream out(p);
    out << std::setw(2) << manifest_.to_json() << '\n';
    if (!announced_manifest_) {
      std::cout << "manifest: " << p.string() << '\n';
      announced_manifest_ = true;
    }
  }

  void finish(const std::string& status) {
    manifest_.status = status;
    manifest_.finished_utc = utc_timestamp();
    write_manifest();
  }

  template <typename Fn>
  void write(const fs::path& p, Fn fn) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error(p.string() + ": cannot write");
    fn(out);
    std::cout << "wrote " << p.string() << '\n';
  }

 private:
  CommonOptions opts_;
  RunManifest manifest_;
  fs::path out_;
  bool announced_manifest_ = false;
};

ChannelEstimate realization_estimate(const SystemConfig& cfg, std::uint64_t r) {
  RngStream rng = RngStream::derive(cfg.rng_seed, "channel", r);
  return draw_channel_estimate(cfg, rng);
}

void write_beampattern_csv(const CMatrix& precoder, const BeampatternSpec& spec,
                           double pattern_scale, double spacing, std::ostream& out) {
  const SteeringGrid grid(spec.angles, static_cast<int>(precoder.rows()), spacing);
  const Vector gains = grid.gains(precoder);
  out << "angle_deg,gain,desired_scaled\n" << std::setprecision(12);
  for (Eigen::Index m = 0; m < spec.angles.size(); ++m)
    out << rad_to_deg(spec.angles(m)) << ',' << gains(m) << ','
        << pattern_scale * spec.desired(m) << '\n';
}

void print_evaluation(const experiments::Evaluation& ev, const admm::RadComSolution& sol,
                      const SystemConfig& cfg) {
  std::cout << std::setprecision(6);
  std::cout << "  ewsr_bpshz        " << ev.ewsr << '\n';
  std::cout << "  rbse              " << ev.rbse << '\n';
  for (int k = 0; k < cfg.n_users; ++k)
    std::cout << "  ar_user_" << k + 1 << "         " << ev.per_user_ar(k) << '\n';
  std::cout << "  common_power_frac " << ev.common_power_frac << '\n';
  std::cout << "  pattern_scale     " << sol.pattern_scale << '\n';
  std::cout << "  max_row_deviation "
            << sol.precoder.max_row_power_deviation(cfg.power_total / cfg.n_tx) << '\n';
}

int cmd_run(const CommonOptions& o, std::uint64_t realization) {
  Session s(o, "run");
  const Config& c = s.config();
  const fs::path precoder_csv = s.path("precoder.csv");
  const fs::path channel_csv = s.path("channel.csv");
  const fs::path beam_csv = s.path("beampattern.csv");
  const fs::path resid_csv = s.path("residuals.csv");
  for (const auto& p : {precoder_csv, channel_csv, beam_csv, resid_csv}) s.plan_output(p);
  s.write_manifest();

  const BeampatternSpec spec = c.beampattern.build(c.system);
  const ChannelEstimate est = realization_estimate(c.system, realization);
  admm::RunOptions ro;
  ro.settings = c.solver;
  ro.realization = realization;
  admm::RadComSolution sol;
  try {
    sol = admm::run(c.system, est, spec, ro);
  } catch (const admm::SubproblemFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    s.finish(e.qos_infeasible() ? "qos_infeasible" : "solver_failure");
    return kExitNotConverged;
  }

  std::cout << (sol.converged ? "converged" : "not converged") << " after " << sol.iterations
            << " ADMM iterations (" << to_string(c.system.access_mode) << ", "
            << to_string(c.system.csit_mode) << " CSIT, lambda " << c.system.reg_lambda << ")\n";
  RngStream eval_rng = RngStream::derive(c.system.rng_seed, "eval", realization);
  print_evaluation(
      experiments::evaluate_solution(sol, est, c.system, spec, c.sweep.eval_samples, eval_rng),
      sol, c.system);

  s.write(precoder_csv, [&](std::ostream& out) { write_complex_csv(sol.precoder.columns, out); });
  s.write(channel_csv, [&](std::ostream& out) { write_complex_csv(est.h_hat, out); });
  s.write(beam_csv, [&](std::ostream& out) {
    write_beampattern_csv(sol.precoder.columns, spec, sol.pattern_scale,
                          c.system.antenna_spacing, out);
  });
  s.write(resid_csv, [&](std::ostream& out) { admm::write_residual_csv(sol.history, out); });
  s.finish(sol.converged ? "converged" : "not_converged");
  return sol.converged ? kExitOk : kExitNotConverged;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

struct SweepFlags {
  std::string modes;
  std::string csit;
  std::optional<int> realizations;
  std::string lambdas;
  int jobs = 0;
};

int cmd_sweep(CommonOptions o, const SweepFlags& f) {
  auto as_json_list = [](const std::string& text, bool quote) {
    std::string out = "[";
    for (const std::string& item : split_list(text))
      out += (out.size() > 1 ? "," : "") + (quote ? "\"" + item + "\"" : item);
    return out + "]";
  };
  if (!f.modes.empty()) o.sets.push_back("sweep.modes=" + as_json_list(f.modes, true));
  if (!f.csit.empty()) o.sets.push_back("sweep.csit_modes=" + as_json_list(f.csit, true));
  if (!f.lambdas.empty()) o.sets.push_back("sweep.lambdas=" + as_json_list(f.lambdas, false));
  if (f.realizations) o.sets.push_back("sweep.realizations=" + std::to_string(*f.realizations));

  Session s(o, "sweep");
  const Config& c = s.config();
  std::vector<std::pair<fs::path, fs::path>> files;
  for (CsitMode csit : c.sweep.csit_modes)
    for (AccessMode access : c.sweep.access_modes) {
      const std::string stem =
          "tradeoff_" + std::string(to_string(access)) + "_" + std::string(to_string(csit));
      files.emplace_back(s.path(stem + ".csv"), s.path(stem + ".dat"));
      s.plan_output(files.back().first);
      s.plan_output(files.back().second);
    }
  s.write_manifest();

  const BeampatternSpec spec = c.beampattern.build(c.system);
  const int jobs =
      f.jobs > 0 ? f.jobs : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const experiments::Progress progress = [](int done, int total,
                                            const experiments::RealizationRecord& r) {
    if (r.outcome != experiments::Outcome::kOk)
      std::cerr << "  [" << done << "/" << total << "] " << to_string(r.access) << " lambda "
                << r.lambda << " realization " << r.realization << ": " << r.message << '\n';
  };
  const experiments::SweepResult res =
      experiments::run_sweep(c.sweep, c.system, spec, c.solver, jobs, progress);

  bool any = false;
  for (const experiments::TradeoffPoint& p : res.points) {
    any = any || p.n_ok > 0;
    std::cout << to_string(p.access) << ' ' << to_string(p.csit) << " lambda " << p.lambda
              << ": ewsr " << p.ewsr << " erbse " << p.erbse << " (ok " << p.n_ok
              << ", infeasible " << p.n_infeasible << ", failed " << p.n_failed << ")\n";
  }
  std::size_t i = 0;
  for (CsitMode csit : c.sweep.csit_modes)
    for (AccessMode access : c.sweep.access_modes) {
      s.write(files[i].first, [&](std::ostream& out) {
        experiments::write_tradeoff_csv(res.points, access, csit, c.system.n_users, out);
      });
      s.write(files[i].second, [&](std::ostream& out) {
        experiments::write_gnuplot(res.points, access, csit, out);
      });
      ++i;
    }
  s.finish(any ? "done" : "no_points");
  return any ? kExitOk : kExitNotConverged;
}

struct EvalFlags {
  std::string precoder;
  std::string channel;
  std::uint64_t realization = 0;
};

int cmd_eval(const CommonOptions& o, const EvalFlags& f) {
  Session s(o, "eval");
  const Config& c = s.config();
  const fs::path eval_json = s.path("evaluation.json");
  s.plan_output(eval_json);
  s.write_manifest();

  const BeampatternSpec spec = c.beampattern.build(c.system);
  ChannelEstimate est = realization_estimate(c.system, f.realization);
  if (!f.channel.empty()) {
    est.h_hat = read_complex_csv_file(f.channel);
    est.validate(c.system.channel_variances);
  }
  admm::RadComSolution sol;
  sol.precoder = Precoder(read_complex_csv_file(f.precoder));
  if (sol.precoder.n_tx() != c.system.n_tx || sol.precoder.n_users() != c.system.n_users)
    throw ConfigError(f.precoder + ": precoder shape does not match system.n_tx/n_users");
  const SteeringGrid grid(spec.angles, c.system.n_tx, c.system.antenna_spacing);
  sol.pattern_scale = radar::optimal_pattern_scale(grid.gains(sol.precoder.columns), spec.desired);
  sol.shares = admm::refit_shares(sol.precoder.columns,
                                  admm::realization_batch(c.system, est, f.realization), c.system);
  RngStream eval_rng = RngStream::derive(c.system.rng_seed, "eval", f.realization);
  const experiments::Evaluation ev =
      experiments::evaluate_solution(sol, est, c.system, spec, c.sweep.eval_samples, eval_rng);
  std::cout << "evaluation of " << fs::absolute(f.precoder).string() << '\n';
  print_evaluation(ev, sol, c.system);

  nlohmann::json j = {{"ewsr_bpshz", ev.ewsr},
                      {"rbse", ev.rbse},
                      {"bse", ev.bse},
                      {"common_power_frac", ev.common_power_frac},
                      {"pattern_scale", sol.pattern_scale},
                      {"max_row_deviation",
                       sol.precoder.max_row_power_deviation(c.system.power_total / c.system.n_tx)}};
  for (int k = 0; k < c.system.n_users; ++k) {
    j["ar_user"].push_back(ev.per_user_ar(k));
    j["private_power_frac"].push_back(ev.private_power_frac(k));
  }
  s.write(eval_json, [&](std::ostream& out) { out << std::setw(2) << j << '\n'; });
  s.finish("done");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RadCom precoder design: rate-splitting downlink with a radar beampattern"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, eval_opts;
  std::uint64_t run_realization = 0;
  SweepFlags sweep_flags;
  EvalFlags eval_flags;

  CLI::App* run = app.add_subcommand("run", "One ADMM optimization for one channel realization");
  add_common(run, run_opts);
  run->add_option("--realization", run_realization, "Channel realization index")
      ->capture_default_str();

  CLI::App* sweep = app.add_subcommand("sweep", "Trade-off sweep over lambda and realizations");
  add_common(sweep, sweep_opts);
  sweep->add_option("--modes", sweep_flags.modes, "Access modes, e.g. rsma,sdma");
  sweep->add_option("--csit", sweep_flags.csit, "CSIT modes, e.g. partial,perfect");
  sweep->add_option("--realizations", sweep_flags.realizations, "Realizations per point");
  sweep->add_option("--lambdas", sweep_flags.lambdas, "Comma-separated lambda grid");
  sweep->add_option("--jobs", sweep_flags.jobs, "Concurrent realizations (0: all cores)");

  CLI::App* eval = app.add_subcommand("eval", "Re-evaluate a stored precoder CSV");
  add_common(eval, eval_opts);
  eval->add_option("--precoder", eval_flags.precoder, "Precoder CSV (row,col,real,imag)")
      ->required();
  eval->add_option("--channel", eval_flags.channel, "Channel estimate CSV; drawn if omitted");
  eval->add_option("--realization", eval_flags.realization, "Realization index for draws")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts, run_realization);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_flags);
    if (*eval) return cmd_eval(eval_opts, eval_flags);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
