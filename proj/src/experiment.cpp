#include "tfdotoc/experiment.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/otoc.hpp"
#include "tfdotoc/parallel.hpp"
#include "tfdotoc/spectral.hpp"
#include "tfdotoc/tfd.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#ifndef TFDOTOC_VERSION
#define TFDOTOC_VERSION "0.0.0"
#endif

namespace tfdotoc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Largest chain whose full spectrum fits the dense solver.
constexpr int kMaxChain = 12;
constexpr std::size_t kMaxTimePoints = 100000;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  if (s == "inf" || s == "infinity" || s == "Inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

template <class Int>
Int parse_integer(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::string fixed(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_string(ErrorMethod m) { return m == ErrorMethod::first_order ? "first_order" : "resampled"; }

double column(const RunRow& r, const std::string& name) {
  if (name == "t") return r.t;
  if (name == "O_g") return r.O_g;
  if (name == "N_g") return r.N_g;
  if (name == "O_corr") return r.O_corr;
  if (name == "O_th") return r.O_th;
  if (name == "O_g_norm") return r.O_g_norm;
  if (name == "O_th_norm") return r.O_th_norm;
  return r.sigma_corr;
}

std::vector<std::string> selected_columns(const std::vector<std::string>& outputs) {
  if (outputs.empty()) return csv_columns();
  std::vector<std::string> cols{"t"};
  // Keep the canonical order whatever order the selectors came in.
  for (const auto& c : csv_columns()) {
    if (c == "t") continue;
    for (const auto& o : outputs)
      if (o == c) cols.push_back(c);
  }
  return cols;
}

double safe_ratio(double a, double b) { return std::abs(b) < 1e-12 ? kNaN : a / b; }

}  // namespace

std::string software_version() { return TFDOTOC_VERSION; }

std::vector<double> TimeGrid::points() const {
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(start + double(i) * step);
  return out;
}

void ExperimentSpec::validate() const {
  if (n < 2 || n > kMaxChain) {
    throw ValidationError("n: chain length must lie in [2, " + std::to_string(kMaxChain) + "], got " +
                          std::to_string(n));
  }
  if (!(lambda >= 0.0)) throw ValidationError("lambda: must be >= 0 or inf");
  if (beta_override && !(*beta_override >= 0.0)) throw ValidationError("beta: must be >= 0 or inf");
  if (!(J > 0.0) || !std::isfinite(J)) throw ValidationError("J: must be finite and > 0");
  try {
    parse_site_operator(W, n);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("W: ") + e.what());
  }
  try {
    if (!parse_site_operator(V, n)) throw ValidationError("V must be a Pauli, not the identity");
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("V: ") + e.what());
  }
  if (!(times.step > 0.0) || !std::isfinite(times.step)) throw ValidationError("times.step: must be > 0");
  if (!(times.start >= 0.0) || !std::isfinite(times.stop) || !(times.stop >= times.start)) {
    throw ValidationError("times: need 0 <= start <= stop");
  }
  if ((times.stop - times.start) / times.step >= double(kMaxTimePoints)) {
    throw ValidationError("times: more than " + std::to_string(kMaxTimePoints) + " points");
  }
  try {
    evolution.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("evolution: ") + e.what());
  }
  if (shots && *shots < 2) throw ValidationError("shots: need at least 2 shots per branch");
  if (!(readout_x >= 0.0 && readout_x <= 0.5)) throw ValidationError("readout_x: must lie in [0, 0.5]");
  for (const auto& o : outputs) {
    bool known = false;
    for (const auto& c : csv_columns()) known = known || c == o;
    if (!known) throw ValidationError("outputs: unknown column '" + o + "'");
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "n",     "lambda",  "beta",         "J",      "W",        "V",       "times",
      "t_start", "t_stop", "t_step",      "evolution", "gamma", "epsilon", "trajectories",
      "shots", "readout_x", "seed",       "outputs", "error_method"};
  return keys;
}

void set_field(ExperimentSpec& spec, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "n") {
    spec.n = parse_integer<int>(key, value);
  } else if (key == "lambda") {
    spec.lambda = parse_real(key, value);
  } else if (key == "beta") {
    if (value == "none" || value.empty()) {
      spec.beta_override.reset();
    } else {
      spec.beta_override = parse_real(key, value);
    }
  } else if (key == "J") {
    spec.J = parse_real(key, value);
  } else if (key == "W") {
    spec.W = value;
  } else if (key == "V") {
    spec.V = value;
  } else if (key == "times") {
    const auto parts = split(value, ':');
    if (parts.size() != 3) throw ValidationError("times: expected start:stop:step, got '" + raw + "'");
    spec.times = {parse_real("times.start", parts[0]), parse_real("times.stop", parts[1]),
                  parse_real("times.step", parts[2])};
  } else if (key == "t_start") {
    spec.times.start = parse_real(key, value);
  } else if (key == "t_stop") {
    spec.times.stop = parse_real(key, value);
  } else if (key == "t_step") {
    spec.times.step = parse_real(key, value);
  } else if (key == "evolution") {
    try {
      spec.evolution.kind = parse_evolution_kind(value);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("evolution: ") + e.what());
    }
  } else if (key == "gamma") {
    spec.evolution.gamma = parse_real(key, value);
  } else if (key == "epsilon") {
    spec.evolution.epsilon = parse_real(key, value);
  } else if (key == "trajectories") {
    spec.evolution.trajectories = parse_integer<int>(key, value);
  } else if (key == "shots") {
    if (value == "none" || value.empty()) {
      spec.shots.reset();
    } else {
      spec.shots = parse_integer<int>(key, value);
    }
  } else if (key == "readout_x") {
    spec.readout_x = parse_real(key, value);
  } else if (key == "seed") {
    spec.seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "outputs") {
    spec.outputs = split(value, ',');
  } else if (key == "error_method") {
    if (value == "first_order") {
      spec.error_method = ErrorMethod::first_order;
    } else if (value == "resampled") {
      spec.error_method = ErrorMethod::resampled;
    } else {
      throw ValidationError("error_method: expected first_order or resampled, got '" + raw + "'");
    }
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

ConfigMap parse_config(std::istream& in) {
  ConfigMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    bool known = false;
    for (const auto& k : config_keys()) known = known || k == key;
    if (!known) throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  return parse_config(in);
}

ExperimentSpec spec_from_config(const ConfigMap& config, ExperimentSpec base) {
  // The combined `times` key goes first so explicit t_* keys refine it.
  if (auto it = config.find("times"); it != config.end()) set_field(base, it->first, it->second);
  for (const auto& [key, value] : config) {
    if (key != "times") set_field(base, key, value);
  }
  return base;
}

std::string canonical_text(const ExperimentSpec& s) {
  std::ostringstream o;
  o << "n=" << s.n << "\nlambda=" << fixed(s.lambda)
    << "\nbeta=" << (s.beta_override ? fixed(*s.beta_override) : "none") << "\nJ=" << fixed(s.J)
    << "\nW=" << s.W << "\nV=" << s.V << "\ntimes=" << fixed(s.times.start) << ':' << fixed(s.times.stop) << ':'
    << fixed(s.times.step) << "\nevolution=" << to_string(s.evolution.kind)
    << "\ngamma=" << fixed(s.evolution.gamma) << "\nepsilon=" << fixed(s.evolution.epsilon)
    << "\ntrajectories=" << s.evolution.trajectories << "\nshots=" << (s.shots ? std::to_string(*s.shots) : "none")
    << "\nreadout_x=" << fixed(s.readout_x) << "\nseed=" << s.seed << "\noutputs=";
  for (std::size_t i = 0; i < s.outputs.size(); ++i) o << (i ? "," : "") << s.outputs[i];
  o << "\nerror_method=" << to_string(s.error_method) << '\n';
  return o.str();
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string spec_hash(const ExperimentSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_text(spec))));
  return buf;
}

RunRecord run(const ExperimentSpec& spec, unsigned threads) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();
  const int n = spec.n;
  const ChainSpec chain{n, spec.J};
  const ObservablePair pair(n, parse_site_operator(spec.W, n), *parse_site_operator(spec.V, n));

  // Normalization needs t = 0 even when the requested grid starts later.
  std::vector<double> times = spec.times.points();
  const bool prepend = times.front() != 0.0;
  if (prepend) times.insert(times.begin(), 0.0);

  const Spectrum chain_spec = full_spectrum(build_chain_hamiltonian(chain, enumerate_sector(n)));
  const auto sector = enumerate_sector(2 * n, 0);
  PureState ground = std::isinf(spec.lambda)
                         ? rung_singlet_state(n, sector)
                         : ground_state(build_parent_hamiltonian({chain, spec.lambda}, sector).op, 2).state;

  RunRecord record;
  record.hash = spec_hash(spec);
  record.version = software_version();
  const FidelityProfile profile(chain_spec, ground);
  if (spec.beta_override) {
    record.beta = *spec.beta_override;
    record.fidelity = profile(record.beta);
  } else if (std::isinf(spec.lambda)) {
    record.beta = 0.0;
    record.fidelity = profile(0.0);
  } else if (spec.lambda == 0.0) {
    record.beta = kInfiniteBeta;
    record.fidelity = profile(kInfiniteBeta);
  } else {
    const auto best = optimize_beta(profile, spec.lambda, {});
    record.beta = best.beta0;
    record.fidelity = best.F;
    record.multimodal = best.multimodal;
  }

  const auto O_th = otoc_exact_series(chain_spec, pair, record.beta, times, VariantKind::Oth);
  EvolutionSpec evo = spec.evolution;
  evo.seed = spec.seed;
  const auto circuit = otoc_circuit(ground, pair, chain, evo, times, Frame::rotated, threads);
  record.frame_sign = circuit.frame_sign;

  const std::size_t T = times.size();
  std::vector<double> O(T), N(T), sO(T), sN(T);
  const double contrast = (1 - 2 * spec.readout_x) * (1 - 2 * spec.readout_x);
  if (spec.shots) {
    // Shot streams are kept apart from the trajectory streams of the same seed.
    const std::uint64_t shot_seed = splitmix64(spec.seed ^ 0x73686f7473ULL);
    for (std::size_t i = 0; i < T; ++i) {
      auto rng_O = make_stream(shot_seed, 2 * i);
      auto rng_N = make_stream(shot_seed, 2 * i + 1);
      const auto eO = sample_shots(circuit.O_outcomes[i], *spec.shots, spec.readout_x, rng_O);
      const auto eN = sample_shots(circuit.N_outcomes[i], *spec.shots, spec.readout_x, rng_N);
      O[i] = circuit.frame_sign * eO.estimate;
      N[i] = circuit.frame_sign * eN.estimate;
      sO[i] = std::hypot(eO.sigma, contrast * circuit.O_noise_se[i]);
      sN[i] = std::hypot(eN.sigma, contrast * circuit.N_noise_se[i]);
    }
  } else {
    for (std::size_t i = 0; i < T; ++i) {
      O[i] = contrast * circuit.O[i];
      N[i] = contrast * circuit.N[i];
      sO[i] = contrast * circuit.O_noise_se[i];
      sN[i] = contrast * circuit.N_noise_se[i];
    }
  }
  const bool uncertain = spec.shots.has_value() || evo.stochastic();
  const auto corr = spec.error_method == ErrorMethod::resampled
                        ? correct_resampled(O, N, sO, sN, 4000, splitmix64(spec.seed ^ 0x726573616d70ULL))
                        : correct(O, N, sO, sN);
  const auto th_norm = normalized(O_th);

  for (std::size_t i = prepend ? 1 : 0; i < T; ++i) {
    RunRow row;
    row.t = times[i];
    row.O_g = O[i];
    row.N_g = N[i];
    row.O_corr = corr.defined[i] ? corr.value[i] : kNaN;
    row.O_th = O_th[i];
    row.O_g_norm = safe_ratio(O[i], O[0]);
    row.O_th_norm = th_norm[i];
    row.sigma_corr = uncertain && corr.defined[i] ? corr.sigma[i] : kNaN;
    record.rows.push_back(row);
  }
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"t",         "O_g",      "N_g",      "O_corr",
                                             "O_th",      "O_g_norm", "O_th_norm", "sigma_corr"};
  return cols;
}

std::string format_value(double x) {
  if (std::isnan(x)) return {};
  return fixed(x);
}

void write_csv(std::ostream& out, const RunRecord& record, const std::vector<std::string>& outputs) {
  const auto cols = selected_columns(outputs);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& row : record.rows) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << format_value(column(row, cols[c]));
    out << '\n';
  }
}

std::vector<RunRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: empty input");
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  std::vector<RunRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RunRow row{kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN};
    std::size_t pos = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto next = line.find(',', pos);
      const std::string cell = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      pos = next == std::string::npos ? line.size() : next + 1;
      const double v = cell.empty() ? kNaN : parse_real("csv." + header[c], cell);
      const auto& name = header[c];
      if (name == "t") row.t = v;
      else if (name == "O_g") row.O_g = v;
      else if (name == "N_g") row.N_g = v;
      else if (name == "O_corr") row.O_corr = v;
      else if (name == "O_th") row.O_th = v;
      else if (name == "O_g_norm") row.O_g_norm = v;
      else if (name == "O_th_norm") row.O_th_norm = v;
      else if (name == "sigma_corr") row.sigma_corr = v;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_meta(std::ostream& out, const ExperimentSpec& spec, const RunRecord& record) {
  nlohmann::json j;
  j["spec_hash"] = record.hash;
  j["version"] = record.version;
  j["wall_seconds"] = record.wall_seconds;
  j["beta"] = std::isinf(record.beta) ? nlohmann::json("inf") : nlohmann::json(record.beta);
  j["fidelity"] = record.fidelity;
  j["multimodal"] = record.multimodal;
  j["frame_sign"] = record.frame_sign;
  j["rows"] = record.rows.size();
  j["spec"] = canonical_text(spec);
  out << j.dump(2) << '\n';
}

SweepResult sweep(const ExperimentSpec& base, const std::string& axis, const std::vector<std::string>& values,
                  unsigned parallel) {
  if (axis == "seed" || axis == "outputs") throw ValidationError("sweep: '" + axis + "' cannot be swept");
  bool known = false;
  for (const auto& k : config_keys()) known = known || k == axis;
  if (!known) throw ValidationError("sweep: axis '" + axis + "' is not a spec field");
  if (values.empty()) throw ValidationError("sweep: no values given");
  base.validate();

  SweepResult result;
  result.axis = axis;
  result.values = values;
  result.records.resize(values.size());
  result.errors.resize(values.size());
  if (parallel == 0) parallel = default_threads();
  const unsigned inner = std::max(1u, default_threads() / parallel);
  parallel_for(values.size(), parallel, [&](std::size_t i) {
    try {
      ExperimentSpec spec = base;
      set_field(spec, axis, values[i]);
      spec.seed = base.seed + i;
      result.records[i] = run(spec, inner);
    } catch (const std::exception& e) {
      result.errors[i] = e.what();
    }
  });
  return result;
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

double kappa_or_nan(std::span<const double> t, std::span<const double> v) {
  try {
    return extract_kappa(t, v).kappa;
  } catch (const Error&) {
    return kNaN;
  }
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepResult& result, const std::vector<std::string>& outputs) {
  const auto cols = selected_columns(outputs);
  out << result.axis;
  for (const auto& c : cols) out << ',' << c;
  out << ",error\n";
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    if (!result.records[i]) {
      out << csv_cell(result.values[i]) << std::string(cols.size(), ',') << ',' << csv_cell(result.errors[i]) << '\n';
      continue;
    }
    for (const auto& row : result.records[i]->rows) {
      out << csv_cell(result.values[i]);
      for (const auto& c : cols) out << ',' << format_value(column(row, c));
      out << ",\n";
    }
  }
}

void write_sweep_summary(std::ostream& out, const SweepResult& result) {
  out << result.axis << ",beta0,T0,F,kappa_g,kappa_th,kappa_corr,error\n";
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    out << csv_cell(result.values[i]);
    if (!result.records[i]) {
      out << ",,,,,,," << csv_cell(result.errors[i]) << '\n';
      continue;
    }
    const auto& r = *result.records[i];
    std::vector<double> t, g, th, corr;
    for (const auto& row : r.rows) {
      t.push_back(row.t);
      g.push_back(row.O_g_norm);
      th.push_back(row.O_th_norm);
      corr.push_back(row.O_corr);
    }
    const double T0 = r.beta == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / r.beta;
    out << ',' << format_value(r.beta) << ',' << format_value(T0) << ',' << format_value(r.fidelity) << ','
        << format_value(kappa_or_nan(t, g)) << ',' << format_value(kappa_or_nan(t, th)) << ','
        << format_value(kappa_or_nan(t, corr)) << ",\n";
  }
}

}  // namespace tfdotoc
