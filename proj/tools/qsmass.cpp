// qsmass command-line front end.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 solver or I/O error.
// On failure the report slot receives {"error": kind, "message": ...}.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "qsmass/qsmass.hpp"

namespace {

using qsmass::Json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Outcome {
  int code = kExitOk;
  std::string report;      // JSON text
  std::string report_path; // empty: stdout
  std::string log;         // stderr text
};

int code_for(const qsmass::Error& e) {
  return e.kind() == "ConfigurationError" ? kExitConfig : kExitSolver;
}

// Runs `body` and converts exceptions into an error report.
template <class F>
Outcome guarded(const std::string& report_path, F&& body) {
  Outcome o;
  o.report_path = report_path;
  try {
    body(o);
  } catch (const qsmass::Error& e) {
    o.code = code_for(e);
    o.report = qsmass::to_json_text(qsmass::error_json(e.kind(), e.what()));
    o.log = e.kind() + ": " + e.what() + "\n";
  } catch (const std::exception& e) {
    o.code = kExitSolver;
    o.report = qsmass::to_json_text(qsmass::error_json("InternalError", e.what()));
    o.log = std::string("InternalError: ") + e.what() + "\n";
  }
  return o;
}

// Emits an outcome; a failing report write turns into exit 3.
int emit(Outcome& o) {
  if (!o.log.empty()) std::cerr << o.log;
  if (o.report_path.empty()) {
    std::cout << o.report;
    return o.code;
  }
  try {
    qsmass::write_text_file(o.report_path, o.report);
  } catch (const qsmass::Error& e) {
    std::cerr << e.kind() << ": " << e.what() << "\n";
    std::cout << qsmass::to_json_text(qsmass::error_json(e.kind(), e.what()));
    return kExitSolver;
  }
  return o.code;
}

int thread_count(int jobs) {
  if (const char* env = std::getenv("QSB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid QSB_THREADS='" << env << "'\n";
  }
  return std::max(jobs, 1);
}

// Runs one task per config on a small pool; results keep input order.
std::vector<Outcome> run_all(const std::vector<std::string>& configs, int threads,
                             const std::function<Outcome(const std::string&)>& task) {
  std::vector<Outcome> out(configs.size());
  const int n = std::min<int>(threads, static_cast<int>(configs.size()));
  if (n <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) out[i] = task(configs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < n; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) out[i] = task(configs[i]);
    });
  for (auto& th : pool) th.join();
  return out;
}

int emit_all(std::vector<Outcome>& outs) {
  int code = kExitOk;
  for (auto& o : outs) code = std::max(code, emit(o));
  return code;
}

// Report path: --out for a single config, else the config's own [output].
std::string report_path_for(const qsmass::RunConfig& cfg, const std::string& out_flag, bool single) {
  if (single && !out_flag.empty()) return out_flag;
  return cfg.report_path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-spherical mass bounds for Bartnik data"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out, series, k_input, history;
  int jobs = 1;
  int band_limit = 8;
  double tol = 1e-10;
  int max_iter = 50;
  int n_dim = 0;
  double r_val = 0.0, min_r = 0.0;

  auto add_batch = [&](CLI::App* sub) {
    sub->add_option("-c,--config", configs, "configuration file(s), TOML or JSON")->required();
    sub->add_option("-o,--out", out, "report path (single config only; default: [output] or stdout)");
    sub->add_option("-j,--jobs", jobs, "configs processed in parallel (QSB_THREADS overrides)")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* bound = app.add_subcommand("bound", "mass upper bounds");
  add_batch(bound);
  CLI::App* zeta = app.add_subcommand("zeta", "zeta upper bound of the metric");
  add_batch(zeta);
  CLI::App* extend = app.add_subcommand("extend", "bounds plus quasi-spherical extension");
  add_batch(extend);
  extend->add_option("-s,--series", series, "series CSV (single config only; default: [output])");

  CLI::App* lambda = app.add_subcommand("lambda", "fill-in lower bound");
  lambda->add_option("-c,--config", configs, "configuration file")->expected(1);
  lambda->add_option("--n", n_dim, "dimension");
  lambda->add_option("--r", r_val, "volume radius");
  lambda->add_option("--minR", min_r, "minimum scalar curvature");
  lambda->add_option("-o,--out", out, "report path");

  CLI::App* uniformize = app.add_subcommand("uniformize", "conformal factor for a target curvature");
  uniformize->add_option("--K", k_input, "target curvature: l,m,re,im harmonics CSV or theta,lambda,value grid CSV")
      ->required();
  uniformize->add_option("--tol", tol, "sup-norm residual tolerance")->check(CLI::PositiveNumber);
  uniformize->add_option("--max-iter", max_iter, "iteration limit")->check(CLI::PositiveNumber);
  uniformize->add_option("-L,--band-limit", band_limit, "grid band limit");
  uniformize->add_option("-o,--out", out, "phi grid CSV")->required();
  uniformize->add_option("--history", history, "residual history CSV (default: <out>.history.csv)");

  CLI::App* path = app.add_subcommand("path", "scalar path table");
  path->add_option("-c,--config", configs, "configuration file")->required()->expected(1);
  path->add_option("-o,--out", out, "path table CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const bool single = configs.size() == 1;
  if (!single && (!out.empty() || !series.empty()) && (bound->parsed() || zeta->parsed() || extend->parsed())) {
    std::cerr << "ConfigurationError: --out/--series need a single --config\n";
    std::cout << qsmass::to_json_text(
        qsmass::error_json("ConfigurationError", "--out/--series need a single --config"));
    return kExitConfig;
  }
  const int threads = thread_count(jobs);

  if (bound->parsed() || zeta->parsed()) {
    const bool is_bound = bound->parsed();
    auto outs = run_all(configs, threads, [&](const std::string& file) {
      std::string rp = single ? out : std::string();
      return guarded(rp, [&](Outcome& o) {
        const qsmass::RunConfig cfg = qsmass::load_config(file);
        o.report_path = report_path_for(cfg, out, single);
        o.report = qsmass::to_json_text(is_bound ? qsmass::run_bound(cfg) : qsmass::run_zeta(cfg));
      });
    });
    return emit_all(outs);
  }

  if (extend->parsed()) {
    auto outs = run_all(configs, threads, [&](const std::string& file) {
      std::string rp = single ? out : std::string();
      return guarded(rp, [&](Outcome& o) {
        const qsmass::RunConfig cfg = qsmass::load_config(file);
        o.report_path = report_path_for(cfg, out, single);
        std::string sp = single && !series.empty() ? series : cfg.series_path;
        qsmass::ExtendRun run;
        try {
          run = qsmass::run_extend(cfg);
        } catch (const qsmass::LapseBlowup& e) {
          // keep what was computed before the lapse collapsed
          if (!sp.empty()) qsmass::write_text_file(sp, qsmass::series_to_csv(e.partial));
          throw;
        }
        if (!sp.empty()) qsmass::write_text_file(sp, qsmass::series_to_csv(run.result));
        o.report = qsmass::to_json_text(run.report);
      });
    });
    return emit_all(outs);
  }

  if (lambda->parsed()) {
    Outcome o = guarded(out, [&](Outcome& o) {
      qsmass::FillinBound fb;
      const bool flags = lambda->count("--n") + lambda->count("--r") + lambda->count("--minR") > 0;
      if (!configs.empty()) {
        if (flags) throw qsmass::ConfigurationError("use either --config or --n/--r/--minR");
        const qsmass::RunConfig cfg = qsmass::load_config(configs.front());
        const qsmass::GridPtr g = qsmass::SphereGrid::build(cfg.band_limit);
        fb = qsmass::lambda_lower_from_metric(qsmass::resolve_metric(cfg, g));
      } else {
        if (lambda->count("--n") == 0 || lambda->count("--r") == 0 || lambda->count("--minR") == 0)
          throw qsmass::ConfigurationError("lambda needs --config or all of --n, --r, --minR");
        fb = qsmass::lambda_lower_general(n_dim, r_val, min_r);
      }
      Json j = Json::object();
      j["n"] = fb.n;
      j["r"] = fb.r;
      j["min_R"] = fb.min_R;
      j["lambda_lower"] = fb.lambda_lower;
      o.report = qsmass::to_json_text(j);
    });
    return emit(o);
  }

  if (uniformize->parsed()) {
    Outcome o = guarded("", [&](Outcome& o) {
      const qsmass::GridPtr g = qsmass::SphereGrid::build(band_limit);
      std::vector<std::string> header;
      qsmass::detail::read_csv_rows(k_input, header);
      qsmass::ScalarField K = header.size() == 4 && header[0] == "l"
                                  ? qsmass::field_from_harmonics(g, qsmass::read_harmonics_csv(k_input))
                                  : qsmass::read_field_csv(g, k_input);
      const qsmass::UniformizationSolution sol = qsmass::solve_conformal_factor(K, tol, max_iter);
      qsmass::write_field_csv(sol.phi, out);
      qsmass::write_text_file(history.empty() ? out + ".history.csv" : history,
                              qsmass::residual_history_csv(sol));
      Json j = Json::object();
      j["residual_sup"] = sol.residual_sup;
      j["iterations"] = sol.iterations;
      const auto com = qsmass::center_of_mass(sol.phi);
      j["center_of_mass"] = Json::array({com[0], com[1], com[2]});
      o.report = qsmass::to_json_text(j);
    });
    return emit(o);
  }

  if (path->parsed()) {
    Outcome o = guarded("", [&](Outcome& o) {
      const qsmass::RunConfig cfg = qsmass::load_config(configs.front());
      const qsmass::GridPtr g = qsmass::SphereGrid::build(cfg.band_limit);
      const qsmass::PathTable tab = qsmass::build_path_table(qsmass::resolve_metric(cfg, g), cfg.path_nodes, cfg.gauge_tol);
      const std::string csv = qsmass::path_table_to_csv(tab);
      if (out.empty()) {
        o.report = csv;
      } else {
        qsmass::write_text_file(out, csv);
        Json j = Json::object();
        j["path_nodes"] = tab.size();
        j["zeta_upper"] = qsmass::zeta_upper(tab);
        o.report = qsmass::to_json_text(j);
      }
    });
    return emit(o);
  }
  return kExitConfig;
}
