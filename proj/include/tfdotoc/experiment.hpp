#pragma once

// Run configuration, the end-to-end pipeline and its CSV artifacts.

#include "tfdotoc/dynamics.hpp"
#include "tfdotoc/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tfdotoc {

std::string software_version();

struct TimeGrid {
  double start = 0.0;
  double stop = 3.0;
  double step = 0.02;

  std::vector<double> points() const;
};

enum class ErrorMethod { first_order, resampled };

struct ExperimentSpec {
  int n = 8;
  double lambda = 1.0;  // kInfiniteCoupling for the rung-singlet limit
  std::optional<double> beta_override;
  double J = 1.0;
  std::string W = "Z@5";
  std::string V = "X@4";
  TimeGrid times;
  EvolutionSpec evolution;
  std::optional<int> shots;  // absent: expectation level
  double readout_x = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // empty: every column
  ErrorMethod error_method = ErrorMethod::first_order;

  /// Throws ValidationError naming the offending key.
  void validate() const;
};

using ConfigMap = std::map<std::string, std::string>;

/// Flat `key = value` lines; '#' starts a comment. Later keys win.
ConfigMap parse_config(std::istream& in);
ConfigMap parse_config_file(const std::string& path);

/// Assigns one key. Keys: n lambda beta J W V times t_start t_stop t_step
/// evolution gamma epsilon trajectories shots readout_x seed outputs
/// error_method.
void set_field(ExperimentSpec& spec, const std::string& key, const std::string& value);
ExperimentSpec spec_from_config(const ConfigMap& config, ExperimentSpec base = {});
const std::vector<std::string>& config_keys();

/// Every field in a fixed order; the basis of the spec hash.
std::string canonical_text(const ExperimentSpec& spec);
std::uint64_t fnv1a(const std::string& bytes);
std::string spec_hash(const ExperimentSpec& spec);

struct RunRow {
  double t = 0.0;
  double O_g = 0.0;
  double N_g = 0.0;
  double O_corr = 0.0;
  double O_th = 0.0;
  double O_g_norm = 0.0;
  double O_th_norm = 0.0;
  double sigma_corr = 0.0;  // NaN when no noise source is present
};

struct RunRecord {
  std::string hash;
  std::string version;
  double wall_seconds = 0.0;
  double beta = 0.0;
  double fidelity = 0.0;
  bool multimodal = false;
  int frame_sign = 1;
  std::vector<RunRow> rows;
};

/// model -> spectral -> tfd -> dynamics -> otoc. Pure in (spec, seed).
RunRecord run(const ExperimentSpec& spec, unsigned threads = 0);

const std::vector<std::string>& csv_columns();
/// %.17g, empty for NaN.
std::string format_value(double x);
void write_csv(std::ostream& out, const RunRecord& record, const std::vector<std::string>& outputs = {});
std::vector<RunRow> read_csv(std::istream& in);
void write_meta(std::ostream& out, const ExperimentSpec& spec, const RunRecord& record);

struct SweepResult {
  std::string axis;
  std::vector<std::string> values;
  std::vector<std::optional<RunRecord>> records;
  std::vector<std::string> errors;  // empty string for successful values
};

/// Fans out over `values` of one config key. Value i runs with seed
/// base.seed + i, so a single-value sweep reproduces `run`.
SweepResult sweep(const ExperimentSpec& base, const std::string& axis, const std::vector<std::string>& values,
                  unsigned parallel = 1);
/// Long format: <axis>,t,<columns>,error
void write_sweep_csv(std::ostream& out, const SweepResult& result, const std::vector<std::string>& outputs = {});
/// One line per value: <axis>,beta0,T0,F,kappa_g,kappa_th,kappa_corr,error
void write_sweep_summary(std::ostream& out, const SweepResult& result);

}  // namespace tfdotoc
