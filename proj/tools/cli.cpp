#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "dyadiclab/experiments.hpp"
#include "dyadiclab/parallel.hpp"

namespace dyadiclab {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dyadiclab experiment runner"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "print the experiment catalog");
  bool as_json = false;
  list->add_flag("--json", as_json, "emit the catalog as a JSON array");

  auto* run = app.add_subcommand("run", "run experiments and write a CSV report");
  std::string config_path;
  std::vector<std::string> names;
  std::optional<std::uint64_t> seed;
  std::optional<int> depth, dim, r, m_top, max_gap, trials, i_max, j_max, threads;
  std::optional<double> gamma;
  std::vector<double> ps;
  std::optional<std::string> out_path, summary_path, space;
  bool parallel = false, timing = false;
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--experiment", names, "experiment name, repeatable or comma separated; 'all' runs the catalog")
      ->delimiter(',');
  run->add_option("--seed", seed, "seed (default: DYADICLAB_SEED, then 0)");
  run->add_option("--depth", depth);
  run->add_option("--dim", dim);
  run->add_option("--p", ps, "exponents, repeatable or comma separated")->delimiter(',');
  run->add_option("--gamma", gamma);
  run->add_option("--r", r);
  run->add_option("--m-top", m_top);
  run->add_option("--max-gap", max_gap);
  run->add_option("--trials", trials);
  run->add_option("--i-max", i_max);
  run->add_option("--j-max", j_max);
  run->add_option("--space", space, "scalar or lq:<n>:<q>");
  run->add_option("--out", out_path, "CSV report path (default stdout)");
  run->add_option("--summary", summary_path, "JSON summary path");
  run->add_flag("--parallel", parallel, "run independent experiments concurrently");
  run->add_flag("--timing", timing, "fill runtime_ms (reports are no longer byte-identical)");
  run->add_option("--threads", threads, "OpenMP thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    if (as_json) {
      out << catalog_json() << "\n";
    } else {
      for (const auto& e : catalog()) out << std::left << std::setw(24) << e.name << e.anchor << "\n";
    }
    return 0;
  }

  ExperimentConfig cfg;
  try {
    // seed precedence: flag, then config, then DYADICLAB_SEED
    if (const char* env = std::getenv("DYADICLAB_SEED")) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError("DYADICLAB_SEED must be a non-negative integer");
      }
    }
    if (!config_path.empty()) cfg = parse_config(slurp(config_path), cfg);
    if (seed) cfg.seed = *seed;
    if (!names.empty()) {
      cfg.experiments.clear();
      for (const auto& n : names) {
        if (n == "all") {
          for (const auto& e : catalog()) cfg.experiments.push_back(e.name);
        } else if (!n.empty()) {
          cfg.experiments.push_back(n);
        }
      }
    }
    if (depth) cfg.depth = depth;
    if (dim) cfg.dim = *dim;
    if (!ps.empty()) cfg.p = ps;
    if (gamma) cfg.gamma = gamma;
    if (r) cfg.r = r;
    if (m_top) cfg.m_top = m_top;
    if (max_gap) cfg.max_gap = max_gap;
    if (trials) cfg.trials = trials;
    if (i_max) cfg.i_max = *i_max;
    if (j_max) cfg.j_max = *j_max;
    if (space) cfg.space = *space;
    if (out_path) cfg.out = *out_path;
    if (summary_path) cfg.summary = *summary_path;
    if (parallel) cfg.parallel = true;
    if (timing) cfg.timing = true;
    validate(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  if (threads) set_threads(*threads);

  const Report rep = run_experiments(cfg);
  if (cfg.out.empty()) {
    write_report_csv(out, rep);
  } else {
    std::ofstream f(cfg.out);
    if (!f) {
      err << "cannot write " << cfg.out << "\n";
      return 2;
    }
    write_report_csv(f, rep);
  }
  if (!cfg.summary.empty()) {
    std::ofstream f(cfg.summary);
    if (!f) {
      err << "cannot write " << cfg.summary << "\n";
      return 2;
    }
    f << report_summary_json(cfg, rep) << "\n";
  }
  for (const auto& row : rep.rows)
    if (!row.pass) err << "FAIL " << row.check_id << "\n";
  return rep.all_pass() ? 0 : 1;
}

}  // namespace dyadiclab
