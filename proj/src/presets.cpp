#include "tfdotoc/presets.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/experiment.hpp"
#include "tfdotoc/parallel.hpp"
#include "tfdotoc/plot.hpp"
#include "tfdotoc/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace tfdotoc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string label(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// "Z@5" -> "Z5", for file names.
std::string slug(const std::string& op) {
  std::string s;
  for (char c : op)
    if (c != '@') s += c;
  return s;
}

double kappa_or_nan(std::span<const double> t, std::span<const double> v) {
  try {
    return extract_kappa(t, v).kappa;
  } catch (const Error&) {
    return kNaN;
  }
}

class Emitter {
 public:
  Emitter(const ReproduceOptions& opts, const std::string& figure)
      : opts_(opts), dir_(std::filesystem::path(opts.out_dir) / figure) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cannot create '" + dir_.string() + "': " + ec.message());
  }

  void csv(const std::string& stem, const std::function<void(std::ostream&)>& body) {
    if (!opts_.csv) return;
    const auto path = (dir_ / (stem + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    body(out);
    if (!out) throw Error("write failed for '" + path + "'");
    written_.push_back(path);
  }

  void svg(const std::string& stem, const Plot& plot) {
    if (!opts_.svg) return;
    const auto path = (dir_ / (stem + ".svg")).string();
    write_svg(path, plot);
    written_.push_back(path);
  }

  std::vector<std::string> files() const { return written_; }

 private:
  const ReproduceOptions& opts_;
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

std::vector<RunRecord> run_all(const std::vector<ExperimentSpec>& specs, unsigned parallel) {
  std::vector<RunRecord> out(specs.size());
  if (parallel == 0) parallel = default_threads();
  const unsigned inner = std::max(1u, default_threads() / parallel);
  parallel_for(specs.size(), parallel, [&](std::size_t i) { out[i] = run(specs[i], inner); });
  return out;
}

ExperimentSpec otoc_spec(const ReproduceOptions& opts, double lambda, const std::string& W, const std::string& V,
                         std::optional<int> shots, std::uint64_t seed_offset) {
  ExperimentSpec s;
  s.n = 8;
  s.lambda = lambda;
  s.W = W;
  s.V = V;
  s.times = {0.0, 3.0, opts.step};
  s.shots = shots;
  s.seed = opts.seed + seed_offset;
  s.evolution.trajectories = opts.trajectories;
  return s;
}

struct Column {
  std::vector<double> t, g, th, corr, sigma;
};

Column columns(const RunRecord& r) {
  Column c;
  for (const auto& row : r.rows) {
    c.t.push_back(row.t);
    c.g.push_back(row.O_g_norm);
    c.th.push_back(row.O_th_norm);
    c.corr.push_back(row.O_corr);
    c.sigma.push_back(row.sigma_corr);
  }
  return c;
}

const char* const kColors[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd"};

// Normalized O_g dashed, normalized O_th dotted, O_corr solid with its band.
void add_otoc_series(Plot& plot, const RunRecord& r, const std::string& tag, const std::string& color) {
  const auto c = columns(r);
  plot.series.push_back({"O_g~ " + tag, c.t, c.g, {}, color, LineStyle::dashed});
  plot.series.push_back({"O_th~ " + tag, c.t, c.th, {}, color, LineStyle::dotted});
  plot.series.push_back({"O_corr " + tag, c.t, c.corr, c.sigma, color, LineStyle::solid});
}

void emit_run(Emitter& e, const std::string& stem, const RunRecord& r) {
  e.csv(stem, [&](std::ostream& o) { write_csv(o, r); });
}

std::vector<std::string> reproduce_fig2(const ReproduceOptions& opts) {
  Emitter e(opts, "fig2");
  const std::vector<int> ns{4, 6, 8, 10};
  const std::vector<double> lambdas{0.25, 0.5, 1, 2, 4, 8, 16};
  const auto rows = fidelity_table(ns, lambdas, opts.parallel);
  e.csv("a_fidelity", [&](std::ostream& o) { write_fidelity_csv(o, rows); });
  e.csv("b_extrapolation", [&](std::ostream& o) { write_extrapolation_csv(o, rows); });

  Plot fa{"Maximum fidelity vs rung coupling", "lambda", "F(beta0, lambda)", true, {}};
  Plot fb{"Effective temperature vs rung coupling", "lambda", "T0 / J", true, {}};
  Plot inset{"Fidelity at lambda = 1 vs n", "n", "F(beta0, 1)", false, {}};
  PlotSeries in_series{"lambda = 1", {}, {}, {}, "", LineStyle::solid, true};
  for (int n : ns) {
    PlotSeries f{"n = " + std::to_string(n), {}, {}, {}, "", LineStyle::solid, true};
    PlotSeries t = f;
    for (const auto& row : rows) {
      if (row.n != n) continue;
      f.x.push_back(row.result.lambda);
      f.y.push_back(row.result.F);
      t.x.push_back(row.result.lambda);
      t.y.push_back(row.result.T0);
      if (row.result.lambda == 1.0) {
        in_series.x.push_back(n);
        in_series.y.push_back(row.result.F);
      }
    }
    fa.series.push_back(f);
    fb.series.push_back(t);
  }
  inset.series.push_back(in_series);
  e.svg("a_fidelity", fa);
  e.svg("a_inset", inset);
  e.svg("b_temperature", fb);

  // Gap of the parent Hamiltonian and T0 against it.
  std::map<int, std::vector<GapPoint>> gaps;
  for (int n : ns) gaps[n] = gap_curve({n, 1.0}, lambdas, GapConvention::sector, opts.parallel);
  e.csv("c_gap", [&](std::ostream& o) {
    o << "n,lambda,gap,ground_energy,T0\n";
    for (int n : ns) {
      for (const auto& g : gaps[n]) {
        double T0 = kNaN;
        for (const auto& row : rows)
          if (row.n == n && row.result.lambda == g.lambda) T0 = row.result.T0;
        o << n << ',' << format_value(g.lambda) << ',' << format_value(g.gap) << ','
          << format_value(g.ground_energy) << ',' << format_value(T0) << '\n';
      }
    }
  });
  Plot fc{"Parent gap vs rung coupling", "lambda", "gap / J", true, {}};
  Plot fd{"Effective temperature vs gap", "gap / J", "T0 / J", false, {}};
  for (int n : ns) {
    PlotSeries c{"n = " + std::to_string(n), {}, {}, {}, "", LineStyle::solid, true};
    PlotSeries d = c;
    for (const auto& g : gaps[n]) {
      c.x.push_back(g.lambda);
      c.y.push_back(g.gap);
      for (const auto& row : rows) {
        if (row.n == n && row.result.lambda == g.lambda) {
          d.x.push_back(g.gap);
          d.y.push_back(row.result.T0);
        }
      }
    }
    fc.series.push_back(c);
    fd.series.push_back(d);
  }
  e.svg("c_gap", fc);
  e.svg("d_temperature_vs_gap", fd);
  return e.files();
}

std::vector<std::string> reproduce_fig3(const ReproduceOptions& opts) {
  Emitter e(opts, "fig3");
  const std::vector<double> panel_b{1.0, 4.0, kInf};
  std::vector<ExperimentSpec> specs;
  for (std::size_t i = 0; i < panel_b.size(); ++i)
    specs.push_back(otoc_spec(opts, panel_b[i], "Z@5", "X@4", opts.shots, i));
  const auto b = run_all(specs, opts.parallel);
  Plot pb{"Normalized OTOCs, n = 8, W = Z@5, V = X@4", "Jt", "OTOC", false, {}};
  for (std::size_t i = 0; i < b.size(); ++i) {
    emit_run(e, "b_lambda_" + label(panel_b[i]), b[i]);
    add_otoc_series(pb, b[i], "lambda=" + label(panel_b[i]), kColors[i]);
  }
  e.svg("b_otoc", pb);

  const std::vector<double> panel_c{0.5, 1, 2, 4, 10, 20, kInf};
  specs.clear();
  for (std::size_t i = 0; i < panel_c.size(); ++i)
    specs.push_back(otoc_spec(opts, panel_c[i], "Z@5", "X@4", std::nullopt, 100 + i));
  const auto c = run_all(specs, opts.parallel);
  std::vector<double> kth, kg, kcorr;
  for (const auto& r : c) {
    const auto col = columns(r);
    kth.push_back(kappa_or_nan(col.t, col.th));
    kg.push_back(kappa_or_nan(col.t, col.g));
    kcorr.push_back(kappa_or_nan(col.t, col.corr));
  }
  e.csv("c_kappa", [&](std::ostream& o) {
    o << "lambda,beta0,T0,F,kappa_th,kappa_g,kappa_corr\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double T0 = c[i].beta == 0.0 ? kInf : 1.0 / c[i].beta;
      o << label(panel_c[i]) << ',' << format_value(c[i].beta) << ',' << format_value(T0) << ','
        << format_value(c[i].fidelity) << ',' << format_value(kth[i]) << ',' << format_value(kg[i]) << ','
        << format_value(kcorr[i]) << '\n';
    }
  });
  // The infinite coupling has no place on a log axis; it stays in the CSV.
  Plot pc{"Slope at half height vs rung coupling", "lambda", "kappa", true, {}};
  Plot inset{"Slope at half height vs T0", "T0 / J", "kappa", false, {}};
  PlotSeries sth{"O_th~", {}, {}, {}, "", LineStyle::solid, true};
  PlotSeries sg{"O_g~", {}, {}, {}, "", LineStyle::dashed, true};
  PlotSeries ith = sth, ig = sg;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::isinf(panel_c[i])) continue;
    sth.x.push_back(panel_c[i]);
    sth.y.push_back(kth[i]);
    sg.x.push_back(panel_c[i]);
    sg.y.push_back(kg[i]);
    ith.x.push_back(1.0 / c[i].beta);
    ith.y.push_back(kth[i]);
    ig.x.push_back(1.0 / c[i].beta);
    ig.y.push_back(kg[i]);
  }
  pc.series = {sth, sg};
  inset.series = {ith, ig};
  e.svg("c_kappa", pc);
  e.svg("c_inset", inset);
  return e.files();
}

std::vector<std::string> reproduce_fig4(const ReproduceOptions& opts) {
  Emitter e(opts, "fig4");
  const std::vector<std::pair<std::string, double>> panels{{"a", kInf}, {"b", 4.0}, {"c", 1.0}};
  const std::vector<std::pair<std::string, std::string>> pairs{{"Z@5", "X@4"}, {"Z@6", "X@3"}, {"Z@6", "X@2"}};
  std::vector<ExperimentSpec> specs;
  for (std::size_t p = 0; p < panels.size(); ++p)
    for (std::size_t k = 0; k < pairs.size(); ++k)
      specs.push_back(otoc_spec(opts, panels[p].second, pairs[k].first, pairs[k].second, opts.shots,
                                p * pairs.size() + k));
  const auto records = run_all(specs, opts.parallel);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    Plot plot{"Normalized OTOCs, n = 8, lambda = " + label(panels[p].second), "Jt", "OTOC", false, {}};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& r = records[p * pairs.size() + k];
      emit_run(e, panels[p].first + "_" + slug(pairs[k].first) + "_" + slug(pairs[k].second), r);
      add_otoc_series(plot, r, pairs[k].first + "," + pairs[k].second, kColors[k]);
    }
    e.svg(panels[p].first + "_otoc", plot);
  }
  return e.files();
}

std::vector<std::string> reproduce_noise(const ReproduceOptions& opts, const std::string& figure, double lambda) {
  Emitter e(opts, figure);
  struct Panel {
    std::string name;
    EvolutionKind kind;
    double gamma, epsilon;
  };
  const std::vector<Panel> panels{{"a_depolarization", EvolutionKind::depolarization, 1.0, 0.0},
                                  {"b_local_dephasing", EvolutionKind::local_dephasing, 0.25, 0.0},
                                  {"c_remnant_coupling", EvolutionKind::remnant_coupling, 0.0, 0.5},
                                  {"d_asymmetric_legs", EvolutionKind::asymmetric_legs, 0.0, 0.2}};
  const std::vector<std::pair<std::string, std::string>> pairs{{"Z@5", "X@4"}, {"Z@6", "X@3"}};
  std::vector<ExperimentSpec> specs;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      auto s = otoc_spec(opts, lambda, pairs[k].first, pairs[k].second, opts.shots, p * pairs.size() + k);
      s.evolution.kind = panels[p].kind;
      s.evolution.gamma = panels[p].gamma;
      s.evolution.epsilon = panels[p].epsilon;
      specs.push_back(s);
    }
  }
  const auto records = run_all(specs, opts.parallel);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    Plot plot{to_string(panels[p].kind) + ", n = 8, lambda = " + label(lambda), "Jt", "OTOC", false, {}};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& r = records[p * pairs.size() + k];
      emit_run(e, panels[p].name + "_" + slug(pairs[k].first) + "_" + slug(pairs[k].second), r);
      add_otoc_series(plot, r, pairs[k].first + "," + pairs[k].second, kColors[k == 0 ? 0 : 2]);
    }
    e.svg(panels[p].name, plot);
  }
  return e.files();
}

const VariantKind kVariants[] = {VariantKind::O1, VariantKind::O2, VariantKind::O3, VariantKind::Oth};

std::vector<std::string> reproduce_figA(const ReproduceOptions& opts) {
  Emitter e(opts, "figA");
  const int n = 8;
  const Spectrum chain = full_spectrum(build_chain_hamiltonian({n, 1.0}, enumerate_sector(n)));
  const ObservablePair pair(n, parse_site_operator("Z@5", n), *parse_site_operator("X@4", n));
  // The coldest curves need longer than Jt = 3 to reach half height.
  const auto times = TimeGrid{0.0, 6.0, opts.step}.points();

  const std::vector<double> panel_a{0.125, 1.0, 8.0};
  Plot pa{"Variant OTOCs, n = 8, W = Z@5, V = X@4", "Jt", "normalized OTOC", false, {}};
  const LineStyle styles[] = {LineStyle::solid, LineStyle::dashed, LineStyle::dotted};
  for (std::size_t i = 0; i < panel_a.size(); ++i) {
    const double beta = 1.0 / panel_a[i];
    std::vector<std::vector<double>> curves;
    for (auto kind : kVariants) curves.push_back(normalized(otoc_exact_series(chain, pair, beta, times, kind)));
    e.csv("a_T_" + label(panel_a[i]), [&](std::ostream& o) {
      o << "t,O1_norm,O2_norm,O3_norm,Oth_norm\n";
      for (std::size_t k = 0; k < times.size(); ++k) {
        o << format_value(times[k]);
        for (const auto& c : curves) o << ',' << format_value(c[k]);
        o << '\n';
      }
    });
    for (std::size_t v = 0; v < curves.size(); ++v) {
      pa.series.push_back({to_string(kVariants[v]) + " T=" + label(panel_a[i]), times, curves[v], {},
                           kColors[v], styles[i]});
    }
  }
  e.svg("a_variants", pa);

  const std::vector<double> temps{0.125, 0.25, 0.5, 1, 2, 4, 8};
  const auto k = variant_kappas(chain, pair, temps, times);
  e.csv("b_kappa", [&](std::ostream& o) {
    o << "T,kappa_O1,kappa_O2,kappa_O3,kappa_Oth\n";
    for (std::size_t i = 0; i < temps.size(); ++i) {
      o << format_value(temps[i]);
      for (const auto& row : k.kappa) o << ',' << format_value(row[i]);
      o << '\n';
    }
  });
  Plot pb{"Slope at half height vs temperature", "k_B T / J", "kappa", true, {}};
  for (std::size_t v = 0; v < k.kappa.size(); ++v)
    pb.series.push_back({to_string(kVariants[v]), temps, k.kappa[v], {}, kColors[v], LineStyle::solid, true});
  e.svg("b_kappa", pb);
  return e.files();
}

}  // namespace

Figure parse_figure(const std::string& name) {
  for (auto f : {Figure::fig2, Figure::fig3, Figure::fig4, Figure::fig5, Figure::fig6, Figure::figA}) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("unknown figure '" + name + "' (fig2, fig3, fig4, fig5, fig6, figA)");
}

std::string to_string(Figure f) {
  switch (f) {
    case Figure::fig2: return "fig2";
    case Figure::fig3: return "fig3";
    case Figure::fig4: return "fig4";
    case Figure::fig5: return "fig5";
    case Figure::fig6: return "fig6";
    case Figure::figA: return "figA";
  }
  return "unknown";
}

std::vector<std::string> reproduce(Figure figure, const ReproduceOptions& options) {
  if (!(options.step > 0.0)) throw ValidationError("step: must be > 0");
  if (options.shots < 2) throw ValidationError("shots: need at least 2");
  if (options.trajectories < 1) throw ValidationError("trajectories: need at least 1");
  switch (figure) {
    case Figure::fig2: return reproduce_fig2(options);
    case Figure::fig3: return reproduce_fig3(options);
    case Figure::fig4: return reproduce_fig4(options);
    case Figure::fig5: return reproduce_noise(options, "fig5", kInf);
    case Figure::fig6: return reproduce_noise(options, "fig6", 1.0);
    case Figure::figA: return reproduce_figA(options);
  }
  return {};
}

std::vector<FidelityRow> fidelity_table(const std::vector<int>& ns, const std::vector<double>& lambdas,
                                        unsigned parallel) {
  for (int n : ns)
    if (n < 2 || n > 12) throw ValidationError("n: must lie in [2, 12], got " + std::to_string(n));
  for (double l : lambdas)
    if (!(l > 0.0)) throw ValidationError("lambda: must be > 0 or inf");
  std::vector<Spectrum> chains;
  for (int n : ns) chains.push_back(full_spectrum(build_chain_hamiltonian({n, 1.0}, enumerate_sector(n))));

  std::vector<FidelityRow> rows(ns.size() * lambdas.size());
  parallel_for(rows.size(), parallel, [&](std::size_t idx) {
    const std::size_t a = idx / lambdas.size(), b = idx % lambdas.size();
    const int n = ns[a];
    const double lambda = lambdas[b];
    const auto sector = enumerate_sector(2 * n, 0);
    rows[idx].n = n;
    if (std::isinf(lambda)) {
      const FidelityProfile profile(chains[a], rung_singlet_state(n, sector));
      auto& r = rows[idx].result;
      r.lambda = lambda;
      r.beta0 = 0.0;
      r.T0 = kInf;
      r.F = profile(0.0);
      return;
    }
    const auto g = ground_state(build_parent_hamiltonian({{n, 1.0}, lambda}, sector).op, 2);
    rows[idx].result = optimize_beta(FidelityProfile(chains[a], g.state), lambda, {});
  });
  return rows;
}

void write_fidelity_csv(std::ostream& out, const std::vector<FidelityRow>& rows) {
  out << "n,lambda,beta0,T0,F,multimodal\n";
  for (const auto& r : rows) {
    out << r.n << ',' << format_value(r.result.lambda) << ',' << format_value(r.result.beta0) << ','
        << format_value(r.result.T0) << ',' << format_value(r.result.F) << ',' << (r.result.multimodal ? 1 : 0)
        << '\n';
  }
}

void write_extrapolation_csv(std::ostream& out, const std::vector<FidelityRow>& rows) {
  out << "lambda,sizes,slope,intercept,T0_infinity,slope_se,intercept_se\n";
  std::map<double, std::vector<std::pair<int, double>>> by_lambda;
  for (const auto& r : rows)
    if (std::isfinite(r.result.lambda)) by_lambda[r.result.lambda].emplace_back(r.n, r.result.T0);
  for (const auto& [lambda, points] : by_lambda) {
    if (points.size() < 3) continue;
    const auto fit = extrapolate_T0(points);
    out << format_value(lambda) << ',' << points.size() << ',' << format_value(fit.slope) << ','
        << format_value(fit.intercept) << ',' << format_value(fit.t0_infinity) << ','
        << format_value(fit.slope_se) << ',' << format_value(fit.intercept_se) << '\n';
  }
}

VariantKappas variant_kappas(const Spectrum& chain, const ObservablePair& pair,
                             const std::vector<double>& temperatures, const std::vector<double>& times) {
  VariantKappas out;
  out.temperatures = temperatures;
  const ThermalOtoc thermal(chain, pair);
  for (auto kind : kVariants) {
    std::vector<double> row;
    for (double T : temperatures) {
      if (!(T > 0.0)) throw ValidationError("temperature must be > 0");
      const auto values = thermal.series(1.0 / T, times, kind);
      std::vector<double> re;
      for (const auto& v : values) re.push_back(v.real());
      row.push_back(kappa_or_nan(times, normalized(re)));
    }
    out.kappa.push_back(row);
  }
  return out;
}

namespace {

VerifyCheck check(const std::string& name, const std::function<std::string(bool&)>& body) {
  VerifyCheck c{name, false, {}};
  try {
    c.detail = body(c.passed);
  } catch (const std::exception& e) {
    c.passed = false;
    c.detail = std::string("exception: ") + e.what();
  }
  return c;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

std::vector<VerifyCheck> verify(unsigned threads) {
  std::vector<VerifyCheck> out;
  const int n = 4;
  const ChainSpec chain{n, 1.0};
  const Spectrum spectrum = full_spectrum(build_chain_hamiltonian(chain, enumerate_sector(n)));
  const ObservablePair pair(n, parse_site_operator("Z@3", n), *parse_site_operator("X@2", n));
  const auto times = TimeGrid{0.0, 3.0, 0.1}.points();
  const auto full = enumerate_sector(2 * n);

  out.push_back(check("circuit on |tfd> equals O_th", [&](bool& ok) {
    double worst = 0.0;
    for (double beta : {0.0, 0.5, 1.0, 4.0}) {
      const auto tfd = build_tfd(spectrum, beta);
      const auto c = otoc_circuit(tfd.state, pair, chain, {}, times, Frame::tfd, threads);
      const auto th = otoc_exact_series(spectrum, pair, beta, times, VariantKind::Oth);
      for (std::size_t i = 0; i < times.size(); ++i) worst = std::max(worst, std::abs(c.O[i] - th[i]));
    }
    ok = worst < 1e-10;
    return "max deviation " + sci(worst);
  }));

  out.push_back(check("U0 insertion leaves the circuit unchanged", [&](bool& ok) {
    const auto tfd = build_tfd(spectrum, 1.0);
    const auto phi = build_phi(tfd, build_U0(n, full));
    const auto a = otoc_circuit(tfd.state, pair, chain, {}, times, Frame::tfd, threads);
    const auto b = otoc_circuit(phi, pair, chain, {}, times, Frame::rotated, threads);
    double worst = 0.0, spread = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      worst = std::max(worst, std::abs(a.O[i] - b.O[i]));
      spread = std::max(spread, std::abs(b.N[i] - b.N[0]));
    }
    ok = worst < 1e-10 && spread < 1e-10;
    return "max deviation " + sci(worst) + ", N spread " + sci(spread);
  }));

  out.push_back(check("particle-hole identity for n <= 8", [&](bool&ok) {
    ok = true;
    for (int m = 2; m <= 8; ++m) ok = ok && verify_particle_hole({m, 1.0});
    const auto tfd = build_tfd(spectrum, 1.0);
    const auto legs = build_leg_operators(chain, full);
    const auto R2 = build_R(n, Leg::second, full);
    const auto a = evolve_ideal(tfd.state, legs.ideal_generator(), 1.0);
    const auto b = evolve_via_R(tfd.state, legs, R2, 1.0);
    const double dev = (a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff();
    ok = ok && dev < 1e-9;
    return "via-R deviation " + sci(dev);
  }));

  out.push_back(check("variants coincide at beta = 0", [&](bool& ok) {
    double worst = 0.0;
    const auto th = otoc_exact_series(spectrum, pair, 0.0, times, VariantKind::Oth);
    for (auto kind : {VariantKind::O1, VariantKind::O2, VariantKind::O3}) {
      const auto v = otoc_exact_series(spectrum, pair, 0.0, times, kind);
      for (std::size_t i = 0; i < times.size(); ++i) worst = std::max(worst, std::abs(v[i] - th[i]));
    }
    ok = worst < 1e-10;
    return "max deviation " + sci(worst);
  }));

  ExperimentSpec base;
  base.n = n;
  base.lambda = kInf;
  base.W = "Z@3";
  base.V = "X@2";
  base.times = {0.0, 2.0, 0.1};

  out.push_back(check("rung singlets: O_corr equals normalized O_th", [&](bool& ok) {
    const auto r = run(base, threads);
    double worst = 0.0;
    for (const auto& row : r.rows) worst = std::max(worst, std::abs(row.O_corr - row.O_th_norm));
    ok = worst < 1e-9;
    return "max deviation " + sci(worst);
  }));

  out.push_back(check("depolarization and readout cancel in O_corr", [&](bool& ok) {
    const auto clean = run(base, threads);
    auto noisy_spec = base;
    noisy_spec.evolution.kind = EvolutionKind::depolarization;
    noisy_spec.evolution.gamma = 1.0;
    const auto noisy = run(noisy_spec, threads);
    auto readout_spec = base;
    readout_spec.readout_x = 0.1;
    const auto readout = run(readout_spec, threads);
    double dep = 0.0, ro = 0.0;
    for (std::size_t i = 0; i < clean.rows.size(); ++i) {
      dep = std::max(dep, std::abs(noisy.rows[i].O_corr - clean.rows[i].O_corr));
      ro = std::max(ro, std::abs(readout.rows[i].O_corr - clean.rows[i].O_corr));
    }
    ok = dep < 1e-10 && ro < 1e-12;
    return "depolarization " + sci(dep) + ", readout " + sci(ro);
  }));

  out.push_back(check("runs are deterministic and CSV round-trips", [&](bool& ok) {
    auto spec = base;
    spec.lambda = 2.0;
    spec.shots = 1000;
    spec.seed = 7;
    std::ostringstream a, b;
    const auto first = run(spec, threads);
    write_csv(a, first);
    write_csv(b, run(spec, 1));
    std::istringstream in(a.str());
    const auto back = read_csv(in);
    bool same = back.size() == first.rows.size();
    for (std::size_t i = 0; same && i < back.size(); ++i) {
      same = back[i].O_g == first.rows[i].O_g && back[i].N_g == first.rows[i].N_g &&
             back[i].O_corr == first.rows[i].O_corr && back[i].sigma_corr == first.rows[i].sigma_corr;
    }
    ok = a.str() == b.str() && same;
    return std::string(a.str() == b.str() ? "identical" : "different") + " output, round trip " +
           (same ? "exact" : "lossy");
  }));
  return out;
}

}  // namespace tfdotoc
