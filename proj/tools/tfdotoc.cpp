// Command-line front end: run, sweep, reproduce, fidelity, verify.

#include "tfdotoc/errors.hpp"
#include "tfdotoc/experiment.hpp"
#include "tfdotoc/plot.hpp"
#include "tfdotoc/presets.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace tfdotoc;

namespace {

constexpr int kValidationExit = 2;
constexpr int kComputeExit = 3;

struct Common {
  std::string config;
  std::string out = ".";
  std::string format = "csv";
  unsigned parallel = 1;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool spec_flags) {
  cmd->add_option("--config", c.config, "key = value run configuration");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--parallel", c.parallel, "concurrent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--format", c.format, "csv, svg or both")->check(CLI::IsMember({"csv", "svg", "both"}));
  if (!spec_flags) return;
  // Every config key doubles as a flag and wins over the file.
  for (const auto& key : config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key, [&c, key](const std::string& v) { c.overrides[key] = v; }, "overrides config key " + key);
  }
}

ExperimentSpec load_spec(const Common& c) {
  ConfigMap config;
  if (!c.config.empty()) config = parse_config_file(c.config);
  for (const auto& [k, v] : c.overrides) config[k] = v;
  auto spec = spec_from_config(config);
  spec.validate();
  return spec;
}

std::filesystem::path out_dir(const Common& c) {
  std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
  std::cerr << "wrote " << path.string() << '\n';
}

bool wants_csv(const Common& c) { return c.format != "svg"; }
bool wants_svg(const Common& c) { return c.format != "csv"; }

Plot run_plot(const std::string& title, const std::vector<std::pair<std::string, const RunRecord*>>& runs) {
  Plot plot{title, "Jt", "OTOC", false, {}};
  for (const auto& [tag, r] : runs) {
    std::vector<double> t, g, th, corr, sigma;
    for (const auto& row : r->rows) {
      t.push_back(row.t);
      g.push_back(row.O_g_norm);
      th.push_back(row.O_th_norm);
      corr.push_back(row.O_corr);
      sigma.push_back(row.sigma_corr);
    }
    const std::string suffix = tag.empty() ? "" : " " + tag;
    const std::size_t before = plot.series.size();
    plot.series.push_back({"O_corr" + suffix, t, corr, sigma, "", LineStyle::solid});
    // Companion curves share the O_corr color.
    plot.series.push_back({"O_g~" + suffix, t, g, {}, "", LineStyle::dashed});
    plot.series.push_back({"O_th~" + suffix, t, th, {}, "", LineStyle::dotted});
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    const char* color = palette[(before / 3) % std::size(palette)];
    for (std::size_t k = before; k < plot.series.size(); ++k) plot.series[k].color = color;
  }
  return plot;
}

int cmd_run(const Common& c) {
  const auto spec = load_spec(c);
  const auto record = run(spec, 0);
  const auto dir = out_dir(c);
  if (wants_csv(c)) {
    std::ostringstream csv, meta;
    write_csv(csv, record, spec.outputs);
    write_meta(meta, spec, record);
    write_file(dir / "run.csv", csv.str());
    write_file(dir / "run.meta.json", meta.str());
  }
  if (wants_svg(c)) {
    write_file(dir / "run.svg",
               render_svg(run_plot("n = " + std::to_string(spec.n) + ", W = " + spec.W + ", V = " + spec.V,
                                   {{"", &record}})));
  }
  std::cout << "spec " << record.hash << "  beta " << format_value(record.beta) << "  F "
            << format_value(record.fidelity) << (record.multimodal ? "  (multimodal)" : "") << "  rows "
            << record.rows.size() << '\n';
  return 0;
}

int cmd_sweep(const Common& c, const std::string& axis, const std::vector<std::string>& values) {
  const auto base = load_spec(c);
  const auto result = sweep(base, axis, values, c.parallel);
  const auto dir = out_dir(c);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!result.records[i]) {
      ++failures;
      std::cerr << axis << "=" << values[i] << " failed: " << result.errors[i] << '\n';
    }
  }
  if (wants_csv(c)) {
    std::ostringstream csv, summary;
    write_sweep_csv(csv, result, base.outputs);
    write_sweep_summary(summary, result);
    write_file(dir / "sweep.csv", csv.str());
    write_file(dir / "sweep_summary.csv", summary.str());
  }
  if (wants_svg(c)) {
    std::vector<std::pair<std::string, const RunRecord*>> runs;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (result.records[i]) runs.emplace_back(axis + "=" + values[i], &*result.records[i]);
    write_file(dir / "sweep.svg", render_svg(run_plot("sweep over " + axis, runs)));
  }
  return failures == values.size() ? kComputeExit : 0;
}

int cmd_reproduce(const Common& c, const std::string& figure, ReproduceOptions opts) {
  opts.out_dir = c.out;
  opts.csv = wants_csv(c);
  opts.svg = wants_svg(c);
  opts.parallel = c.parallel;
  for (const auto& path : reproduce(parse_figure(figure), opts)) std::cerr << "wrote " << path << '\n';
  return 0;
}

int cmd_fidelity(const Common& c, const std::vector<int>& ns, const std::vector<std::string>& lambda_text) {
  std::vector<double> lambdas;
  for (const auto& l : lambda_text) {
    ExperimentSpec probe;
    set_field(probe, "lambda", l);
    lambdas.push_back(probe.lambda);
  }
  const auto rows = fidelity_table(ns, lambdas, c.parallel);
  std::ostringstream table, extrapolation;
  write_fidelity_csv(table, rows);
  std::cout << table.str();
  const auto dir = out_dir(c);
  write_file(dir / "fidelity.csv", table.str());
  write_extrapolation_csv(extrapolation, rows);
  write_file(dir / "fidelity_extrapolation.csv", extrapolation.str());
  return 0;
}

int cmd_verify() {
  bool all = true;
  for (const auto& check : verify(0)) {
    std::cout << (check.passed ? "PASS  " : "FAIL  ") << check.name << "  (" << check.detail << ")\n";
    all = all && check.passed;
  }
  return all ? 0 : kComputeExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-temperature OTOC protocol simulator for coupled XX spin chains"};
  app.set_version_flag("--version", software_version());
  app.require_subcommand(1);

  Common common;
  std::string axis, figure;
  std::vector<std::string> values, lambdas{"0.5", "1", "2", "4", "8"};
  std::vector<int> ns{4, 6, 8};
  ReproduceOptions repro;

  auto* run_cmd = app.add_subcommand("run", "run one experiment and write CSV/SVG");
  add_common(run_cmd, common, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "fan one config key out over several values");
  add_common(sweep_cmd, common, true);
  sweep_cmd->add_option("--axis", axis, "config key to vary")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

  auto* repro_cmd = app.add_subcommand("reproduce", "run a figure preset");
  add_common(repro_cmd, common, false);
  repro_cmd->add_option("figure", figure, "fig2, fig3, fig4, fig5, fig6 or figA")->required();
  repro_cmd->add_option("--seed", repro.seed, "base seed");
  repro_cmd->add_option("--shots", repro.shots, "measurements per branch and time");
  repro_cmd->add_option("--trajectories", repro.trajectories, "local dephasing trajectories");
  repro_cmd->add_option("--step", repro.step, "time step in units of 1/J");

  auto* fid_cmd = app.add_subcommand("fidelity", "optimal TFD temperature of the parent ground state");
  add_common(fid_cmd, common, false);
  fid_cmd->add_option("--n", ns, "chain lengths")->delimiter(',');
  fid_cmd->add_option("--lambda", lambdas, "rung couplings (inf allowed)")->delimiter(',');

  auto* verify_cmd = app.add_subcommand("verify", "run the quick invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  }

  try {
    if (*run_cmd) return cmd_run(common);
    if (*sweep_cmd) return cmd_sweep(common, axis, values);
    if (*repro_cmd) return cmd_reproduce(common, figure, repro);
    if (*fid_cmd) return cmd_fidelity(common, ns, lambdas);
    if (*verify_cmd) return cmd_verify();
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidationExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kComputeExit;
  }
  return 0;
}
