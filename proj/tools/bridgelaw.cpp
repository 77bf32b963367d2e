// SPDX-License-Identifier: Apache-2.0
//
// bridgelaw: run verification recipes, export density grids, draw samples.
//
// Exit codes: 0 all requested verifications pass, 1 a verification failed,
// 2 configuration error.
#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <locale>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bridgelaw/experiments.hpp"
#include "bridgelaw/laws.hpp"
#include "bridgelaw/pathkit.hpp"
#include "bridgelaw/reference.hpp"

namespace {

using namespace bridgelaw;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string name;
  std::optional<std::size_t> paths;
  std::optional<double> dt;
  std::optional<std::uint64_t> seed;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out;
  std::string format = "json";
  std::string budget = "full";
  std::optional<std::size_t> exact_draws;
  std::string crossing = "bridge";
  std::string grid;
  double c = 0.5;
  std::size_t n = 1000;
  bool omit_header = false;
};

std::uint64_t resolve_seed(const RunConfig& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("BRIDGELAW_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("BRIDGELAW_SEED is not an unsigned integer: ") + env);
  }
  return 1;
}

experiments::Budget resolve_budget(const std::string& b) {
  if (b == "quick") return experiments::Budget::quick;
  if (b == "full") return experiments::Budget::full;
  throw ConfigError("unknown budget: " + b);
}

std::string format_number(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

// Writes to --out or standard output.
void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty() || cfg.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file: " + cfg.out);
  f << text;
}

std::string checks_csv(const std::vector<experiments::ExperimentReport>& reports) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "experiment,id,statistic,target,tolerance,p_value,verdict\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& r : reports)
    for (const auto& c : r.checks)
      os << r.name << ',' << c.id << ',' << format_number(c.statistic) << ',' << opt(c.target) << ','
         << opt(c.tolerance) << ',' << opt(c.p_value) << ',' << (c.verdict ? "pass" : "fail") << '\n';
  return os.str();
}

int cmd_verify(const RunConfig& cfg) {
  const auto name = experiments::canonical_name(cfg.name);
  if (!name) throw ConfigError("unknown experiment: " + cfg.name);
  auto spec = experiments::default_spec(*name, resolve_budget(cfg.budget), resolve_seed(cfg), cfg.workers);
  if (cfg.paths) spec.paths = *cfg.paths;
  if (cfg.dt) spec.scheme.dt = *cfg.dt;
  if (cfg.exact_draws) spec.exact_draws = *cfg.exact_draws;
  spec.scheme.crossing_correction =
      cfg.crossing == "none" ? pathkit::CrossingCorrection::none : pathkit::CrossingCorrection::bridge;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto report = experiments::run(spec);
  if (cfg.format == "csv") {
    emit(cfg, checks_csv({report}));
  } else {
    const auto j = cfg.omit_header ? experiments::report_body(report) : experiments::report_json(report);
    emit(cfg, j.dump(2) + "\n");
  }
  std::cerr << report.name << ": " << (report.overall ? "pass" : "fail") << " ("
            << report.statistical_failures << "/" << report.statistical_checks
            << " statistical failures, allowed " << report.allowed_failures << ")\n";
  return report.overall ? kExitPass : kExitFail;
}

int cmd_verify_all(const RunConfig& cfg) {
  const auto suite = experiments::run_all(
      resolve_seed(cfg), resolve_budget(cfg.budget), cfg.workers, [](const experiments::ExperimentReport& r) {
        std::cerr << r.name << ": " << (r.overall ? "pass" : "fail") << " in " << std::fixed
                  << std::setprecision(1) << r.wall_time << " s\n";
      });
  if (cfg.format == "csv") {
    emit(cfg, checks_csv(suite.reports));
  } else {
    const auto j = cfg.omit_header ? experiments::suite_body(suite) : experiments::suite_json(suite);
    emit(cfg, j.dump(2) + "\n");
  }
  std::cerr << "overall: " << (suite.overall ? "pass" : "fail") << " (" << suite.statistical_failures << "/"
            << suite.statistical_checks << " statistical failures, allowed " << suite.allowed_failures << ")\n";
  return suite.overall ? kExitPass : kExitFail;
}

struct Grid {
  double lo, hi, step;
};

Grid parse_grid(const std::string& s) {
  std::vector<double> parts;
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  std::string tok;
  while (std::getline(is, tok, ':')) {
    std::istringstream ts(tok);
    ts.imbue(std::locale::classic());
    double v;
    if (!(ts >> v) || !ts.eof()) throw ConfigError("bad --grid component: '" + tok + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw ConfigError("--grid expects lo:hi:step");
  const Grid g{parts[0], parts[1], parts[2]};
  if (!(g.lo < g.hi) || !(g.step > 0.0)) throw ConfigError("--grid needs lo < hi and step > 0");
  if ((g.hi - g.lo) / g.step > 1e7) throw ConfigError("--grid has more than 1e7 points");
  return g;
}

/// Grid points lo + i * step up to hi. A point on a singular point of the
/// density moves by step / 2 toward the inside of the grid.
std::vector<double> grid_points(const Grid& g, const laws::AnalyticDensity& d) {
  std::vector<double> singular = d.options().singular_points;
  const auto n = static_cast<std::size_t>(std::floor((g.hi - g.lo) / g.step + 1e-9));
  std::vector<double> xs;
  for (std::size_t i = 0; i <= n; ++i) {
    double x = g.lo + static_cast<double>(i) * g.step;
    for (double p : singular)
      if (std::abs(x - p) <= 1e-6 * g.step) x = i == n && n > 0 ? x - 0.5 * g.step : x + 0.5 * g.step;
    xs.push_back(x);
  }
  return xs;
}

int cmd_density(const RunConfig& cfg) {
  auto d = laws::density_by_name(cfg.name, cfg.c);
  if (!d) throw ConfigError("unknown density: " + cfg.name);
  if (cfg.grid.empty()) throw ConfigError("density needs --grid lo:hi:step");
  const Grid g = parse_grid(cfg.grid);
  const auto xs = grid_points(g, *d);
  std::vector<double> cdf;
  cdf.reserve(xs.size());
  for (double x : xs) cdf.push_back(d->cdf(x));
  std::ostringstream os;
  os.imbue(std::locale::classic());
  if (cfg.format == "json") {
    nlohmann::ordered_json j;
    j["name"] = cfg.name;
    j["grid"] = {{"lo", g.lo}, {"hi", g.hi}, {"step", g.step}};
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) rows.push_back({{"x", xs[i]}, {"pdf", d->pdf(xs[i])}, {"cdf", cdf[i]}});
    j["rows"] = std::move(rows);
    os << j.dump(2) << '\n';
  } else {
    os << "x,pdf,cdf\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
      os << format_number(xs[i]) << ',' << format_number(d->pdf(xs[i])) << ',' << format_number(cdf[i]) << '\n';
  }
  emit(cfg, os.str());
  return kExitPass;
}

int cmd_sample(const RunConfig& cfg) {
  const std::uint64_t seed = resolve_seed(cfg);
  std::vector<std::array<double, 3>> rows(cfg.n);
  int arity = 3;
  static const std::vector<std::pair<std::string, laws::ReferenceTag>> refs{
      {"thm1_rhs", laws::ReferenceTag::thm1_rhs},
      {"cor1_hitting_rhs", laws::ReferenceTag::cor1_hitting_rhs},
      {"cor1_bessel_rhs", laws::ReferenceTag::cor1_bessel_rhs},
      {"cor2_rhs", laws::ReferenceTag::cor2_rhs},
      {"lemma_exp_pair", laws::ReferenceTag::lemma_exp_pair},
      {"fixed_time_factorization", laws::ReferenceTag::fixed_time_factorization},
      {"exact_T1", laws::ReferenceTag::exact_T1},
      {"exact_joint_descB", laws::ReferenceTag::exact_joint_descB}};
  bool found = false;
  for (const auto& [key, tag] : refs) {
    if (key != cfg.name) continue;
    found = true;
    const laws::ReferenceKind kind{tag};
    arity = kind.arity();
    auto rng = make_stream(derive_seed(seed, "sample/" + key), 0);
    for (auto& r : rows) r = laws::sample_reference(kind, rng).v;
  }
  if (!found) {
    pathkit::StepScheme scheme;
    if (cfg.dt) scheme.dt = *cfg.dt;
    scheme.crossing_correction =
        cfg.crossing == "none" ? pathkit::CrossingCorrection::none : pathkit::CrossingCorrection::bridge;
    try {
      scheme.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    int which = -1;
    if (cfg.name == "pseudo_bridge") which = 0;
    if (cfg.name == "hitting") which = 1;
    if (cfg.name == "bessel") which = 2;
    if (which < 0) throw ConfigError("unknown sample kind: " + cfg.name);
    const std::uint64_t s = derive_seed(seed, "sample/" + cfg.name);
    parallel_for(cfg.n, cfg.workers, [&](std::size_t i) {
      thread_local pathkit::DiscretePath scratch;
      auto rng = make_stream(s, i);
      const auto set = pathkit::sample_triplet_set(rng, scheme, scratch);
      const auto& t = which == 0 ? set.pseudo_bridge : which == 1 ? set.hitting : set.bessel;
      rows[i] = {t.x, t.y, t.z};
    });
  }
  static const char* names[] = {"x", "y", "z"};
  std::ostringstream os;
  os.imbue(std::locale::classic());
  if (cfg.format == "json") {
    nlohmann::ordered_json j;
    j["name"] = cfg.name;
    j["seed"] = seed;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) arr.push_back(std::vector<double>(r.begin(), r.begin() + arity));
    j["rows"] = std::move(arr);
    os << j.dump() << '\n';
  } else {
    for (int k = 0; k < arity; ++k) os << (k ? "," : "") << names[k];
    os << '\n';
    for (const auto& r : rows) {
      for (int k = 0; k < arity; ++k) os << (k ? "," : "") << format_number(r[k]);
      os << '\n';
    }
  }
  emit(cfg, os.str());
  return kExitPass;
}

std::string catalog_text() {
  std::string s = "experiments:";
  for (const auto& n : experiments::catalog()) s += " " + n.substr(7);
  s += "\ndensities:";
  for (const auto& n : laws::density_names()) s += " " + n;
  s += "\nsamples: thm1_rhs cor1_hitting_rhs cor1_bessel_rhs cor2_rhs lemma_exp_pair "
       "fixed_time_factorization exact_T1 exact_joint_descB pseudo_bridge hitting bessel\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Monte Carlo and quadrature checks of Brownian identities in law", "bridgelaw"};
  app.footer(catalog_text());
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "master seed (default: $BRIDGELAW_SEED, else 1)");
    sub->add_option("--workers", cfg.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out, "output file (default: standard output)");
  };

  auto* verify = app.add_subcommand("verify", "run one experiment");
  verify->add_option("name", cfg.name, "experiment name")->required();
  verify->add_option("--paths", cfg.paths, "simulated paths")->check(CLI::PositiveNumber);
  verify->add_option("--dt", cfg.dt, "fine step size")->check(CLI::PositiveNumber);
  verify->add_option("--exact-draws", cfg.exact_draws, "exact reference draws")->check(CLI::PositiveNumber);
  verify->add_option("--crossing", cfg.crossing, "crossing correction")->check(CLI::IsMember({"bridge", "none"}));
  verify->add_option("--budget", cfg.budget, "defaults for unset sizes")->check(CLI::IsMember({"quick", "full"}));
  verify->add_option("--format", cfg.format, "report format")->check(CLI::IsMember({"json", "csv"}));
  verify->add_flag("--omit-header", cfg.omit_header, "leave out the timing header");
  add_common(verify);

  auto* all = app.add_subcommand("verify-all", "run the whole catalog");
  all->add_option("--budget", cfg.budget, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  all->add_option("--format", cfg.format, "report format")->check(CLI::IsMember({"json", "csv"}));
  all->add_flag("--omit-header", cfg.omit_header, "leave out the timing header");
  add_common(all);

  auto* density = app.add_subcommand("density", "export a density grid");
  density->add_option("name", cfg.name, "density name")->required();
  density->add_option("--grid", cfg.grid, "lo:hi:step")->allow_extra_args(false);
  density->add_option("--c", cfg.c, "parameter of the A_c family")->check(CLI::Range(0.0, 1.0));
  density->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"json", "csv"}));
  density->add_option("--out", cfg.out, "output file (default: standard output)");

  auto* sample = app.add_subcommand("sample", "draw samples of a reference law or path triplet");
  sample->add_option("name", cfg.name, "sample kind")->required();
  sample->add_option("--n", cfg.n, "number of draws")->check(CLI::PositiveNumber);
  sample->add_option("--dt", cfg.dt, "fine step size for path triplets")->check(CLI::PositiveNumber);
  sample->add_option("--crossing", cfg.crossing, "crossing correction")->check(CLI::IsMember({"bridge", "none"}));
  sample->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"json", "csv"}));
  add_common(sample);

  // Negative grid bounds look like flags to the parser; glue them to --grid.
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--grid") {
      args[i] += "=" + args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    }
  std::reverse(args.begin(), args.end());

  // Per-command default format: reports are JSON, grids and samples CSV.
  const bool format_given = std::find(args.begin(), args.end(), "--format") != args.end() ||
                            std::any_of(args.begin(), args.end(), [](const std::string& a) { return a.rfind("--format=", 0) == 0; });
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }
  if (!format_given) cfg.format = (density->parsed() || sample->parsed()) ? "csv" : "json";

  try {
    if (verify->parsed()) {
      cfg.command = "verify";
      return cmd_verify(cfg);
    }
    if (all->parsed()) {
      cfg.command = "verify-all";
      return cmd_verify_all(cfg);
    }
    if (density->parsed()) {
      cfg.command = "density";
      return cmd_density(cfg);
    }
    cfg.command = "sample";
    return cmd_sample(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  } catch (const experiments::UnknownExperiment& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
