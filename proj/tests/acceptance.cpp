// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: full budget on seeds 1, 2 and 3, plus the CLI determinism
// check. Prints one PASS/FAIL line per criterion and exits nonzero on any FAIL.
//
//   acceptance [report_dir]
//
// Suite reports are written to report_dir (default: acceptance_reports).
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bridgelaw/experiments.hpp"

#ifndef BRIDGELAW_CLI
#error "BRIDGELAW_CLI must name the command-line executable"
#endif

using namespace bridgelaw;
using namespace bridgelaw::experiments;

namespace {

using experiments::detail::fmt;
using experiments::detail::sign_mass;

const ExperimentReport& find_report(const SuiteReport& s, const std::string& name) {
  for (const auto& r : s.reports)
    if (r.name == name) return r;
  throw std::runtime_error("missing report " + name);
}

const Check& find_check(const ExperimentReport& r, const std::string& id) {
  for (const auto& c : r.checks)
    if (c.id == id) return c;
  throw std::runtime_error("missing check " + r.name + ":" + id);
}

// Collects named checks; the criterion passes when all of them do.
struct Criterion {
  int number;
  std::vector<std::string> failed;
  std::size_t checked = 0;
  std::vector<std::string> notes;

  void need(const ExperimentReport& r, const std::string& id) {
    const auto& c = find_check(r, id);
    ++checked;
    if (!c.verdict) {
      std::ostringstream os;
      os << r.name << ":" << id << " stat=" << fmt(c.statistic);
      if (c.target) os << " target=" << fmt(*c.target);
      if (c.tolerance) os << " tol=" << fmt(*c.tolerance);
      failed.push_back(os.str());
    }
  }
  void need_prefix(const ExperimentReport& r, const std::string& prefix) {
    for (const auto& c : r.checks)
      if (c.id.rfind(prefix, 0) == 0) need(r, c.id);
  }
  void require(bool ok, const std::string& what) {
    ++checked;
    if (!ok) failed.push_back(what);
  }
  bool print() const {
    const bool ok = failed.empty() && checked > 0;
    std::cout << "criterion " << number << ": " << (ok ? "PASS" : "FAIL") << " (" << checked - failed.size()
              << "/" << checked << " checks";
    for (const auto& n : notes) std::cout << "; " << n;
    std::cout << ")\n";
    for (const auto& f : failed) std::cout << "    failed: " << f << "\n";
    std::cout.flush();
    return ok;
  }
};

std::string run_cli(const std::string& args, int* code) {
  const std::string cmd = std::string(BRIDGELAW_CLI) + " " + args + " 2>/dev/null";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    *code = -1;
    return out;
  }
  char buf[1 << 14];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  *code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "acceptance_reports";
  std::filesystem::create_directories(dir);
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = cores;
  std::cout << "acceptance: full budget, seeds 1 2 3, " << workers << " worker(s) on " << cores << " core(s)\n";
  std::cout.flush();

  auto progress = [](const ExperimentReport& r) {
    std::cerr << "  " << r.name << ": " << (r.overall ? "pass" : "fail") << " (" << r.statistical_failures << "/"
              << r.statistical_checks << " statistical failures, allowed " << r.allowed_failures << ", "
              << fmt(r.wall_time) << " s)\n";
  };

  std::vector<SuiteReport> suites;
  std::vector<ExperimentReport> all_reports;
  double appendix_exact_seconds = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    std::cerr << "seed " << seed << "\n";
    BatchCache cache;
    auto s = run_all(seed, Budget::full, workers, progress, &cache);
    write_file(dir / ("verify_all_seed" + std::to_string(seed) + ".json"), suite_json(s).dump(2) + "\n");
    if (seed == 1) {
      // The path batch is cached, so this rerun times the exact-sampler part.
      const auto t0 = std::chrono::steady_clock::now();
      run(default_spec("verify_appendixA", Budget::full, seed, workers), cache);
      appendix_exact_seconds = seconds_since(t0);
    }
    all_reports.insert(all_reports.end(), s.reports.begin(), s.reports.end());
    suites.push_back(std::move(s));
  }
  const SuiteReport& s1 = suites.front();
  bool all_ok = true;

  {
    Criterion c{1};
    const auto& r = find_report(s1, "verify_theorem1");
    for (const char* id : {"ks/x", "ks/y", "ks/z", "ks/x_times_y", "ks/x_plus_z", "ks/y_times_z", "ks_exact/z_uniform"})
      c.need(r, id);
    c.require(r.spec.paths == 200000 && r.spec.exact_draws >= 200000 && r.spec.scheme.dt == 1e-4,
              "theorem1 runs at 2e5 paths, dt 1e-4");
    c.require(r.wall_time < 180.0, "theorem1 wall time " + fmt(r.wall_time) + " s >= 180 s");
    c.notes.push_back("wall time " + fmt(r.wall_time) + " s on " + std::to_string(cores) + " core(s)");
    all_ok &= c.print();
  }
  {
    Criterion c{2};
    const auto& r = find_report(s1, "verify_alpha");
    for (const char* id : {"exact/moment/mean", "exact/moment/second", "paths/band/mean", "paths/band/second",
                           "paths/richardson/mean", "paths/richardson/second"})
      c.need(r, id);
    c.require(r.spec.exact_draws >= 1000000, "alpha uses 1e6 exact draws");
    all_ok &= c.print();
  }
  {
    Criterion c{3};
    const auto& r = find_report(s1, "verify_alpha");
    for (const char* id : {"exact/sign_mass", "paths/richardson/sign_mass"}) c.need(r, id);
    c.notes.push_back("target " + fmt(sign_mass()));
    all_ok &= c.print();
  }
  {
    Criterion c{4};
    const auto& r = find_report(s1, "verify_mellin");
    for (double a : {0.5, 1.0, 2.0})
      for (double cc : {0.5, 1.0, 2.0}) c.need(r, "moment/a=" + fmt(a) + "/c=" + fmt(cc));
    all_ok &= c.print();
  }
  {
    Criterion c{5};
    const auto& r = find_report(s1, "verify_descB");
    for (const char* id : {"quadrature/k_mass", "quadrature/k_negative_mass", "quadrature/h_marginal_is_k",
                           "paths/ks/y", "paths/ks/b"})
      c.need(r, id);
    all_ok &= c.print();
  }
  {
    Criterion c{6};
    const auto& r = find_report(s1, "verify_centered");
    for (int p : {1, 2, 3}) {
      const auto ps = std::to_string(p);
      for (const char* id : {"/mean_h", "/mean_hprime"}) c.need(r, "paths/p=" + ps + id);
      c.need(r, "exact/p=" + ps + "/reduced_form");
    }
    c.notes.push_back(std::to_string(r.spec.paths) + " paths");
    all_ok &= c.print();
  }
  {
    Criterion c{7};
    const auto& r = find_report(s1, "verify_appendixA");
    c.need_prefix(r, "exact/");
    c.require(appendix_exact_seconds < 10.0, "exact part took " + fmt(appendix_exact_seconds) + " s");
    c.notes.push_back("exact part " + fmt(appendix_exact_seconds) + " s");
    all_ok &= c.print();
  }
  {
    Criterion c{8};
    const auto& r = find_report(s1, "verify_bessel_ratio");
    for (const char* id : {"quadrature/l_mass", "quadrature/r_gamma_mass", "paths/ks/r_gamma_density"}) c.need(r, id);
    all_ok &= c.print();
  }
  {
    Criterion c{9};
    const auto& r = find_report(s1, "verify_appendixB");
    for (const char* cs : {"c=0.25", "c=0.5", "c=1"}) {
      const std::string p = cs;
      c.need(r, p + "/ks/a_density");
      c.need(r, p + "/p_pos/a");
    }
    c.need(r, "c=0.5/p_pos_matches_alpha");
    all_ok &= c.print();
  }
  {
    Criterion c{10};
    std::map<unsigned, std::string> bodies;
    for (unsigned w : {1u, 4u, 8u}) {
      int code = 0;
      bodies[w] = run_cli("verify-all --budget quick --seed 1 --omit-header --workers " + std::to_string(w), &code);
      c.require(code == 0 || code == 1, "verify-all exit code " + std::to_string(code));
      c.require(!bodies[w].empty(), "empty report for " + std::to_string(w) + " workers");
    }
    c.require(bodies[1] == bodies[4], "1 vs 4 workers differ");
    c.require(bodies[1] == bodies[8], "1 vs 8 workers differ");
    c.notes.push_back(std::to_string(bodies[1].size()) + " bytes");
    all_ok &= c.print();
  }
  {
    Criterion c{11};
    const auto g = combine(all_reports);
    c.require(g.deterministic_ok, "a deterministic check failed");
    c.require(g.statistical_failures <= g.allowed_failures,
              std::to_string(g.statistical_failures) + " failures > allowed " + std::to_string(g.allowed_failures));
    c.notes.push_back(std::to_string(g.statistical_failures) + " of " + std::to_string(g.statistical_checks) +
                      " statistical checks failed, allowed " + std::to_string(g.allowed_failures));
    for (const auto& r : all_reports)
      for (const auto& ch : r.checks)
        if (!ch.verdict)
          std::cout << "    seed " << r.spec.master_seed << " " << r.name << ":" << ch.id << " stat=" << fmt(ch.statistic)
                    << (ch.target ? " target=" + fmt(*ch.target) : "") << "\n";
    all_ok &= c.print();
  }
  std::cout << "acceptance: " << (all_ok ? "PASS" : "FAIL") << "\n";
  return all_ok ? 0 : 1;
}
