// Command-line front end for the eprsim shared library. Everything numeric
// goes through the C API in eprsim.h; this file only parses flags/config,
// derives per-row seeds, and formats CSV/JSON artifacts.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eprsim.h"

using nlohmann::json;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// CLI-level salts for per-row substreams, kept away from the library's
// internal stream ids (documented in the README)
constexpr std::uint64_t kSweepRowSalt = 1000;
constexpr std::uint64_t kChshPairSalt = 2000;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 9 significant digits: below the algebra tolerance, above Monte Carlo noise
std::string fmt9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

double round9(double x) { return std::strtod(fmt9(x).c_str(), nullptr); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_artifact(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + out_path);
  out << content;
  if (!out) throw UsageError("write failed for " + out_path);
}

// owned-string helper around char** returning C calls
struct CString {
  char* ptr = nullptr;
  ~CString() { eprsim_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

void check(eprsim_status status, const char* what) {
  if (status != EPRSIM_OK)
    throw UsageError(std::string(what) + ": " + eprsim_status_name(status) + " (" +
                     eprsim_last_error() + ")");
}

std::vector<double> parse_grid(const std::string& spec) {
  double start = 0.0, stop = 0.0;
  long steps = 0;
  char extra = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%ld%c", &start, &stop, &steps, &extra) != 3 || steps < 1)
    throw UsageError("grid must be START:STOP:STEPS with STEPS >= 1, got '" + spec + "'");
  std::vector<double> out;
  if (steps == 1) {
    out.push_back(start);
    return out;
  }
  for (long i = 0; i < steps; ++i)
    out.push_back(start + static_cast<double>(i) * (stop - start) / static_cast<double>(steps - 1));
  return out;
}

std::array<double, 4> parse_angles(const std::string& spec) {
  if (spec == "optimal") return {0.0, kPi / 2.0, kPi / 4.0, 3.0 * kPi / 4.0};
  std::array<double, 4> a{};
  char extra = 0;
  if (std::sscanf(spec.c_str(), "%lf,%lf,%lf,%lf%c", &a[0], &a[1], &a[2], &a[3], &extra) != 4)
    throw UsageError("angles must be 'optimal' or g1,g2,g1p,g2p, got '" + spec + "'");
  return a;
}

// config file supplies defaults; explicit flags win
json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json cfg = json::parse(read_file(path), nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object())
    throw UsageError("config " + path + " is not a JSON object");
  return cfg;
}

template <typename T>
void config_default(const json& cfg, const CLI::Option* opt, const char* key, T& var) {
  if (opt != nullptr && opt->count() > 0) return;
  if (!cfg.contains(key)) return;
  try {
    var = cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::uint64_t require_seed(const json& cfg, const CLI::Option* seed_opt, std::uint64_t seed) {
  if (seed_opt->count() > 0) return seed;
  if (cfg.contains("seed")) {
    if (!cfg["seed"].is_number_integer()) throw UsageError("config field 'seed' must be an integer");
    return cfg["seed"].get<std::uint64_t>();
  }
  throw UsageError("this command samples; pass --seed or put \"seed\" in the config");
}

void require_samples(std::uint64_t samples) {
  if (samples < 64) throw UsageError("--samples must be at least 64");
}

double mc_correlation(double gamma, double gamma_prime, std::uint64_t samples,
                      std::uint64_t seed) {
  double table[4];
  check(eprsim_mc_epr_table(gamma, gamma_prime, samples, seed, table), "mc table");
  double e = 0.0;
  check(eprsim_correlation(table, &e), "correlation");
  return e;
}

// ---- subcommands ---------------------------------------------------------

int cmd_epr_sweep(const std::string& grid_spec, std::uint64_t samples, std::uint64_t seed,
                  const std::string& out, const std::string& format) {
  require_samples(samples);
  const std::vector<double> grid = parse_grid(grid_spec);

  json rows = json::array();
  std::ostringstream csv;
  csv << "delta,p11,p12,p21,p22,E_closed,E_mc,abs_err\n";
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const double delta = grid[idx];
    double closed[4];
    check(eprsim_epr_table(0.0, delta, closed), "epr table");
    double e_closed = 0.0;
    check(eprsim_correlation(closed, &e_closed), "correlation");
    const std::uint64_t row_seed = eprsim_derive_seed(seed, kSweepRowSalt + idx);
    const double e_mc = mc_correlation(0.0, delta, samples, row_seed);
    const double abs_err = std::abs(e_mc - e_closed);

    csv << fmt9(delta);
    for (double p : closed) csv << ',' << fmt9(p);
    csv << ',' << fmt9(e_closed) << ',' << fmt9(e_mc) << ',' << fmt9(abs_err) << '\n';
    rows.push_back({{"delta", round9(delta)},
                    {"p", {round9(closed[0]), round9(closed[1]), round9(closed[2]),
                           round9(closed[3])}},
                    {"E_closed", round9(e_closed)},
                    {"E_mc", round9(e_mc)},
                    {"abs_err", round9(abs_err)}});
  }

  if (format == "json")
    write_artifact(out, json{{"schema_version", 1}, {"samples", samples}, {"seed", seed},
                             {"rows", rows}}
                            .dump(2) +
                            "\n");
  else
    write_artifact(out, csv.str());
  return 0;
}

int cmd_chsh(const std::string& angles_spec, std::uint64_t samples, std::uint64_t seed,
             const std::string& out) {
  require_samples(samples);
  const std::array<double, 4> a = parse_angles(angles_spec);  // g1, g2, g1p, g2p

  double s_closed = 0.0;
  check(eprsim_chsh(a[0], a[1], a[2], a[3], &s_closed), "chsh");

  const double e11 = mc_correlation(a[0], a[2], samples, eprsim_derive_seed(seed, kChshPairSalt));
  const double e12 =
      mc_correlation(a[0], a[3], samples, eprsim_derive_seed(seed, kChshPairSalt + 1));
  const double e21 =
      mc_correlation(a[1], a[2], samples, eprsim_derive_seed(seed, kChshPairSalt + 2));
  const double e22 =
      mc_correlation(a[1], a[3], samples, eprsim_derive_seed(seed, kChshPairSalt + 3));
  const double s_mc = e11 - e12 + e21 + e22;

  json doc{{"schema_version", 1},
           {"angles", {round9(a[0]), round9(a[1]), round9(a[2]), round9(a[3])}},
           {"S_closed", round9(s_closed)},
           {"S_mc", round9(s_mc)},
           {"samples", samples},
           {"seed", seed},
           {"classical_bound", 2.0},
           {"tsirelson", round9(2.0 * std::sqrt(2.0))}};
  write_artifact(out, doc.dump(2) + "\n");
  return 0;
}

int cmd_lambda_scan(const std::string& grid_spec, const std::string& out,
                    const std::string& format) {
  const std::vector<double> grid = parse_grid(grid_spec);
  for (double s : grid)
    if (s < 0.0) throw UsageError("lambda scale grid must be nonnegative");

  json rows = json::array();
  std::ostringstream csv;
  csv << "s,regime,admissible,E,S_opt\n";
  for (double s : grid) {
    CString row;
    check(eprsim_lambda_scan_row(s, &row.ptr), "lambda scan");
    json r = json::parse(row.str());
    csv << fmt9(r["s"].get<double>()) << ',' << r["regime"].get<std::string>() << ','
        << (r["admissible"].get<bool>() ? "true" : "false") << ','
        << fmt9(r["E"].get<double>()) << ',' << fmt9(r["S_opt"].get<double>()) << '\n';
    r["s"] = round9(r["s"].get<double>());
    r["E"] = round9(r["E"].get<double>());
    r["S_opt"] = round9(r["S_opt"].get<double>());
    rows.push_back(r);
  }

  if (format == "json")
    write_artifact(out, json{{"schema_version", 1}, {"rows", rows}}.dump(2) + "\n");
  else
    write_artifact(out, csv.str());
  return 0;
}

int cmd_fluctuation_demo(const std::string& pair_path, std::uint64_t samples, std::uint64_t seed,
                         double epsilon, int window, const std::string& out,
                         const std::string& format) {
  require_samples(samples);
  std::optional<std::string> pair_text;
  if (!pair_path.empty()) pair_text = read_file(pair_path);

  CString result;
  check(eprsim_fluctuation_demo(pair_text ? pair_text->c_str() : nullptr, samples, seed, epsilon,
                                window, &result.ptr),
        "fluctuation demo");
  if (format == "json") {
    write_artifact(out, result.str() + "\n");
    return 0;
  }

  const json doc = json::parse(result.str());
  std::ostringstream traces;
  traces << "M,frequency,target\n";
  std::ostringstream verdicts;
  verdicts << "target,kind,verdict,limit,band_min,band_max\n";
  for (const json& t : doc["traces"]) {
    const std::string target = t["target"].get<std::string>();
    for (const json& p : t["points"])
      traces << p[0].get<std::uint64_t>() << ',' << fmt9(p[1].get<double>()) << ',' << target
             << '\n';
    const json& v = t["verdict"];
    verdicts << target << ',' << t["kind"].get<std::string>() << ','
             << v["kind"].get<std::string>() << ',';
    if (v["kind"] == "Stabilizes")
      verdicts << fmt9(v["limit"].get<double>()) << ",,";
    else
      verdicts << ',' << fmt9(v["band_min"].get<double>()) << ','
               << fmt9(v["band_max"].get<double>());
    verdicts << '\n';
  }
  write_artifact(out, traces.str());
  if (out.empty() || out == "-")
    std::cout << '\n' << verdicts.str();
  else
    write_artifact(out + ".verdicts.csv", verdicts.str());
  return 0;
}

int cmd_validate(const std::string& model_path, const std::string& out,
                 const std::string& format) {
  const std::string text = read_file(model_path);
  eprsim_model* model = nullptr;
  const eprsim_status status = eprsim_model_from_json(text.c_str(), &model);
  if (status == EPRSIM_ERR_PARSE || status == EPRSIM_ERR_INVALID_ARGUMENT)
    throw UsageError(std::string("cannot parse model: ") + eprsim_last_error());
  check(status, "load model");

  CString report;
  int all_pass = 0, admissible = 0;
  const eprsim_status vstatus = eprsim_model_validate(model, &report.ptr, &all_pass, &admissible);
  eprsim_model_free(model);
  check(vstatus, "validate");

  if (format == "json") {
    write_artifact(out, report.str() + "\n");
  } else {
    const json doc = json::parse(report.str());
    std::ostringstream text_out;
    for (const json& c : doc["checks"])
      text_out << (c["pass"].get<bool>() ? "pass" : "FAIL") << "  "
               << c["name"].get<std::string>() << "  residual " << fmt9(c["residual"].get<double>())
               << '\n';
    text_out << (all_pass ? "all checks passed" : "validation failed") << '\n';
    text_out << "epr_admissible: " << (admissible ? "yes" : "no") << '\n';
    write_artifact(out, text_out.str());
  }
  return all_pass ? 0 : 1;
}

int cmd_simulate(const std::string& model_path, std::uint64_t samples, std::uint64_t seed,
                 const std::string& out, const std::string& dump_ensemble) {
  require_samples(samples);
  const std::string text = read_file(model_path);
  eprsim_model* model = nullptr;
  const eprsim_status status = eprsim_model_from_json(text.c_str(), &model);
  if (status == EPRSIM_ERR_PARSE) throw UsageError(std::string("cannot parse model: ") + eprsim_last_error());
  check(status, "load model");

  CString result;
  eprsim_status run_status = eprsim_simulate(model, samples, seed, &result.ptr);
  if (run_status != EPRSIM_OK) {
    eprsim_model_free(model);
    throw UsageError(std::string("simulate: ") + eprsim_last_error());
  }

  if (!dump_ensemble.empty()) {
    CString csv;
    run_status = eprsim_ensemble_csv(model, samples, seed, &csv.ptr);
    if (run_status != EPRSIM_OK) {
      eprsim_model_free(model);
      throw UsageError(std::string("ensemble export: ") + eprsim_last_error());
    }
    write_artifact(dump_ensemble, csv.str());
  }
  eprsim_model_free(model);
  write_artifact(out, result.str() + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eprsim — contextual frequency-probability laboratory for EPR-Bohm correlations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(eprsim_version()));

  // shared option storage; each subcommand registers the flags it uses
  std::string config_path, out = "-", format = "csv", grid, angles = "optimal", model_path,
              pair_path, dump_ensemble;
  std::uint64_t samples = 1048576, seed = 0;
  double epsilon = 0.01;
  int window = 3;

  std::string json_only = "json";
  auto add_common = [&](CLI::App* cmd, bool with_format) {
    cmd->add_option("--config", config_path, "JSON config supplying flag defaults");
    cmd->add_option("--out", out, "output path, '-' for stdout")->capture_default_str();
    if (with_format)
      cmd->add_option("--format", format, "artifact format")
          ->check(CLI::IsMember({"csv", "json"}))
          ->capture_default_str();
    else
      cmd->add_option("--format", json_only, "artifact format (this command emits json)")
          ->check(CLI::IsMember({"json"}))
          ->capture_default_str();
  };

  CLI::App* sweep = app.add_subcommand(
      "epr-sweep", "closed-form and Monte Carlo EPR-Bohm tables over a grid of delta");
  add_common(sweep, true);
  grid = "0:3.141592653589793:33";
  auto* sweep_grid = sweep->add_option("--grid", grid, "delta grid START:STOP:STEPS")
                         ->capture_default_str();
  auto* sweep_samples =
      sweep->add_option("--samples", samples, "ensemble size per row")->capture_default_str();
  auto* sweep_seed = sweep->add_option("--seed", seed, "master seed (required)");

  CLI::App* chsh_cmd = app.add_subcommand("chsh", "CHSH value at four analyzer angles");
  add_common(chsh_cmd, false);
  auto* chsh_angles =
      chsh_cmd->add_option("--angles", angles, "'optimal' or g1,g2,g1p,g2p")->capture_default_str();
  auto* chsh_samples =
      chsh_cmd->add_option("--samples", samples, "ensemble size per pair")->capture_default_str();
  auto* chsh_seed = chsh_cmd->add_option("--seed", seed, "master seed (required)");

  CLI::App* scan = app.add_subcommand(
      "lambda-scan", "sweep the scaled maximal phase pattern; closed-form only");
  add_common(scan, true);
  std::string scan_grid_spec = "0:2:21";
  auto* scan_grid =
      scan->add_option("--grid", scan_grid_spec, "scale grid START:STOP:STEPS")->capture_default_str();

  CLI::App* fluct = app.add_subcommand("fluctuation-demo",
                                       "non-stabilizing quadruple frequencies vs observables");
  add_common(fluct, true);
  auto* fluct_samples =
      fluct->add_option("--samples", samples, "ensemble size")->capture_default_str();
  auto* fluct_seed = fluct->add_option("--seed", seed, "master seed (required)");
  auto* fluct_eps =
      fluct->add_option("--epsilon", epsilon, "stabilization threshold")->capture_default_str();
  auto* fluct_window =
      fluct->add_option("--window", window, "stabilization window")->capture_default_str();
  auto* fluct_pair = fluct->add_option("--pair", pair_path, "custom schedule pair JSON path");

  CLI::App* validate = app.add_subcommand("validate", "validate a model document");
  add_common(validate, true);
  auto* validate_model = validate->add_option("--model", model_path, "model JSON path");

  CLI::App* simulate = app.add_subcommand("simulate", "sample a model and report frequencies");
  add_common(simulate, false);
  auto* sim_model = simulate->add_option("--model", model_path, "model JSON path");
  auto* sim_samples =
      simulate->add_option("--samples", samples, "ensemble size")->capture_default_str();
  auto* sim_seed = simulate->add_option("--seed", seed, "master seed (required)");
  auto* sim_dump =
      simulate->add_option("--dump-ensemble", dump_ensemble, "write the realized ensemble CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const json cfg = load_config(config_path);
    CLI::App* sub = app.get_subcommands().front();
    auto common_default = [&](const char* flag, const char* key, std::string& var) {
      const CLI::Option* opt = sub->get_option_no_throw(flag);
      if (opt != nullptr && opt->count() == 0 && cfg.contains(key))
        var = cfg.at(key).get<std::string>();
    };
    common_default("--out", "out", out);
    common_default("--format", "format", format);

    if (sweep->parsed()) {
      config_default(cfg, sweep_grid, "grid", grid);
      config_default(cfg, sweep_samples, "samples", samples);
      return cmd_epr_sweep(grid, samples, require_seed(cfg, sweep_seed, seed), out, format);
    }
    if (chsh_cmd->parsed()) {
      config_default(cfg, chsh_angles, "angles", angles);
      config_default(cfg, chsh_samples, "samples", samples);
      return cmd_chsh(angles, samples, require_seed(cfg, chsh_seed, seed), out);
    }
    if (scan->parsed()) {
      config_default(cfg, scan_grid, "grid", scan_grid_spec);
      return cmd_lambda_scan(scan_grid_spec, out, format);
    }
    if (fluct->parsed()) {
      config_default(cfg, fluct_samples, "samples", samples);
      config_default(cfg, fluct_eps, "epsilon", epsilon);
      config_default(cfg, fluct_window, "window", window);
      config_default(cfg, fluct_pair, "pair", pair_path);
      return cmd_fluctuation_demo(pair_path, samples, require_seed(cfg, fluct_seed, seed), epsilon,
                                  window, out, format);
    }
    if (validate->parsed()) {
      config_default(cfg, validate_model, "model", model_path);
      if (model_path.empty()) throw UsageError("validate needs --model or config 'model'");
      return cmd_validate(model_path, out, format);
    }
    if (simulate->parsed()) {
      config_default(cfg, sim_model, "model", model_path);
      config_default(cfg, sim_samples, "samples", samples);
      config_default(cfg, sim_dump, "dump_ensemble", dump_ensemble);
      if (model_path.empty()) throw UsageError("simulate needs --model or config 'model'");
      return cmd_simulate(model_path, samples, require_seed(cfg, sim_seed, seed), out,
                          dump_ensemble);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
