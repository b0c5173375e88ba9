#pragma once

// Figure presets, the fidelity front-end and the quick invariant suite.

#include "tfdotoc/otoc.hpp"
#include "tfdotoc/tfd.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tfdotoc {

enum class Figure { fig2, fig3, fig4, fig5, fig6, figA };

Figure parse_figure(const std::string& name);
std::string to_string(Figure f);

struct ReproduceOptions {
  std::string out_dir = "out";
  bool csv = true;
  bool svg = true;
  unsigned parallel = 1;
  std::uint64_t seed = 0;
  int shots = 1000;
  int trajectories = 500;
  double step = 0.02;
};

/// Writes <out_dir>/<figure>/<panel>.{csv,svg}; returns the paths written.
std::vector<std::string> reproduce(Figure figure, const ReproduceOptions& options);

struct FidelityRow {
  int n = 0;
  FidelityResult result;
};

/// Optimal beta for every (n, lambda); lambda = inf maps to beta0 = 0.
std::vector<FidelityRow> fidelity_table(const std::vector<int>& ns, const std::vector<double>& lambdas,
                                        unsigned parallel = 1);
void write_fidelity_csv(std::ostream& out, const std::vector<FidelityRow>& rows);
/// T0 versus 1/n per lambda; lambdas with fewer than three sizes are skipped.
void write_extrapolation_csv(std::ostream& out, const std::vector<FidelityRow>& rows);

/// kappa of the normalized variant OTOCs of one pair at temperatures T.
struct VariantKappas {
  std::vector<double> temperatures;
  /// kappa[v][i] for VariantKind v = O1, O2, O3, Oth; NaN without a crossing.
  std::vector<std::vector<double>> kappa;
};
VariantKappas variant_kappas(const Spectrum& chain, const ObservablePair& pair,
                             const std::vector<double>& temperatures, const std::vector<double>& times);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Small-size invariant checks, a few seconds in total.
std::vector<VerifyCheck> verify(unsigned threads = 0);

}  // namespace tfdotoc
