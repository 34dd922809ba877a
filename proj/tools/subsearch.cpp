// subsearch: run optimizers, compute reference optima, plot traces, generate data.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "subsearch/harness.hpp"

namespace {

using subsearch::ConfigError;
using subsearch::ExperimentConfig;

/// Raised for failures after argument parsing succeeded.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  std::string config_path;
  std::string data, model, method, lambda, fstar, out;
  std::size_t iters = 100;
  std::uint64_t seed = 1;
  std::size_t hidden = 0;
  bool standardize = false;
  bool timing = false;
};

void add_config_flags(CLI::App& app, ConfigFlags& f, bool with_method) {
  app.add_option("--config", f.config_path, "JSON file with the same field names as the flags");
  app.add_option("--data", f.data, "libsvm file or gen:<logistic|quadratic>:<n>x<d>");
  app.add_option("--model", f.model, "logistic, lsq, net2, net2_reg, matfact or logdet");
  if (with_method) app.add_option("--method", f.method, "optimizer name");
  app.add_option("--iters", f.iters, "iteration budget");
  app.add_option("--seed", f.seed, "seed for synthetic data and initialization");
  app.add_option("--hidden", f.hidden, "hidden units (net2, default 100) or rank (matfact, default min(10, n, d))");
  app.add_option("--lambda", f.lambda, "0, 1/n or a number");
  app.add_flag("--standardize", f.standardize, "center and scale columns");
  app.add_option("--out", f.out, "output path (default: stdout)");
}

double parse_fstar(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (!s.empty() && *end == '\0') return v;
  std::ifstream in(s);
  if (!in) throw ConfigError("--fstar: '" + s + "' is neither a number nor a readable file");
  std::string tok;
  in >> tok;
  v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || *end != '\0') throw ConfigError("--fstar: no number in '" + s + "'");
  return v;
}

/// JSON first, then every flag that was given on the command line.
ExperimentConfig build_config(const CLI::App& app, const ConfigFlags& f) {
  ExperimentConfig c;
  std::string model = "logistic";
  std::optional<std::string> fstar;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw RuntimeFailure("cannot open config '" + f.config_path + "'");
    nlohmann::json j;
    try {
      in >> j;
      if (j.contains("data")) c.data = j["data"].get<std::string>();
      if (j.contains("model")) model = j["model"].get<std::string>();
      if (j.contains("method")) c.method = j["method"].get<std::string>();
      if (j.contains("iters")) c.iters = j["iters"].get<std::size_t>();
      if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("hidden")) c.hidden = j["hidden"].get<std::size_t>();
      if (j.contains("lambda"))
        c.lambda = j["lambda"].is_string() ? j["lambda"].get<std::string>()
                                           : j["lambda"].dump();
      if (j.contains("standardize")) c.standardize = j["standardize"].get<bool>();
      if (j.contains("timing")) c.timing = j["timing"].get<bool>();
      if (j.contains("fstar"))
        fstar = j["fstar"].is_string() ? j["fstar"].get<std::string>() : j["fstar"].dump();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + f.config_path + "': " + e.what());
    }
  }
  const auto given = [&](const char* name) {
    const CLI::Option* o = app.get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  if (given("--data")) c.data = f.data;
  if (given("--model")) model = f.model;
  if (given("--method")) c.method = f.method;
  if (given("--iters")) c.iters = f.iters;
  if (given("--seed")) c.seed = f.seed;
  if (given("--hidden")) c.hidden = f.hidden;
  if (given("--lambda")) c.lambda = f.lambda;
  if (given("--standardize")) c.standardize = f.standardize;
  if (given("--timing")) c.timing = f.timing;
  if (given("--fstar")) fstar = f.fstar;

  const auto m = subsearch::parse_model(model);
  if (!m) throw ConfigError("unknown model '" + model + "'");
  c.model = *m;
  if (fstar) c.fstar = parse_fstar(*fstar);
  return c;
}

/// Runs `write` against the file at `path`, or stdout when it is empty.
template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot open '" + path + "' for writing");
  write(out);
  out.close();
  if (!out) throw RuntimeFailure("error writing '" + path + "'");
}

std::vector<subsearch::PlotSeries> load_traces(const std::vector<std::string>& paths) {
  std::vector<subsearch::PlotSeries> series;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw RuntimeFailure("cannot open trace '" + p + "'");
    subsearch::PlotSeries s;
    const auto slash = p.find_last_of('/');
    s.name = p.substr(slash == std::string::npos ? 0 : slash + 1);
    if (const auto dot = s.name.rfind(".csv"); dot != std::string::npos) s.name.resize(dot);
    try {
      s.rows = subsearch::read_csv(in);
    } catch (const subsearch::ParseError& e) {
      throw RuntimeFailure("trace '" + p + "': " + e.what());
    }
    series.push_back(std::move(s));
  }
  return series;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace-search optimizers: runs, reference optima, plots and data"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one method and write its CSV trace");
  add_config_flags(*run, run_flags, true);
  run->add_option("--fstar", run_flags.fstar, "optimal value, or a file holding it");
  run->add_flag("--timing", run_flags.timing, "fill the elapsed_s column");

  ConfigFlags ref_flags;
  ref_flags.iters = 5000;
  CLI::App* ref = app.add_subcommand("ref", "compute a reference optimum f*");
  add_config_flags(*ref, ref_flags, false);

  std::vector<std::string> traces;
  std::string plot_fstar, plot_out, style = "subopt";
  CLI::App* plot = app.add_subcommand("plot", "draw CSV traces as an SVG figure");
  plot->add_option("--traces", traces, "CSV traces")->required()->delimiter(',');
  plot->add_option("--fstar", plot_fstar, "optimal value or a file holding it");
  plot->add_option("--style", style, "subopt or steps")
      ->check(CLI::IsMember({"subopt", "steps"}));
  plot->add_option("--out", plot_out, "SVG path (default: stdout)");

  std::string kind = "logistic", gen_out;
  std::size_t gen_n = 100, gen_d = 10;
  std::uint64_t gen_seed = 1;
  double cond = subsearch::kDefaultConditionScale;
  CLI::App* gen = app.add_subcommand("gen", "write a synthetic libsvm dataset");
  gen->add_option("--kind", kind, "logistic or quadratic")
      ->check(CLI::IsMember({"logistic", "quadratic"}));
  gen->add_option("--n", gen_n, "rows");
  gen->add_option("--d", gen_d, "features");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--condition-scale", cond, "largest column scale (logistic)");
  gen->add_option("--out", gen_out, "libsvm path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const ExperimentConfig c = build_config(*run, run_flags);
      subsearch::validate(c);
      const auto res = subsearch::run_experiment(c);
      const auto rows = subsearch::trace_rows(res.trace, c.fstar, res.elapsed_s);
      with_output(run_flags.out, [&](std::ostream& o) { subsearch::write_csv(o, rows); });
    } else if (*ref) {
      ExperimentConfig c = build_config(*ref, ref_flags);
      // A config's "iters" is the method budget; the reference length is a flag.
      c.iters = ref->count("--iters") > 0 ? ref_flags.iters : 5000;
      const double fstar = subsearch::compute_reference(c, c.iters);
      with_output(ref_flags.out, [&](std::ostream& o) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g\n", fstar);
        o << buf;
      });
    } else if (*plot) {
      const auto series = load_traces(traces);
      if (style == "steps") {
        with_output(plot_out, [&](std::ostream& o) { subsearch::emit_steps_svg(o, series); });
      } else {
        double fstar = 0.0;
        if (!plot_fstar.empty()) {
          fstar = parse_fstar(plot_fstar);
        } else {
          fstar = INFINITY;
          for (const auto& s : series)
            for (const auto& r : s.rows) fstar = std::min(fstar, r.f);
        }
        with_output(plot_out,
                    [&](std::ostream& o) { subsearch::emit_subopt_svg(o, series, fstar); });
      }
    } else if (*gen) {
      const auto ds = kind == "logistic" ? subsearch::gen_logistic(gen_n, gen_d, gen_seed, cond)
                                         : subsearch::gen_quadratic(gen_n, gen_d, gen_seed);
      try {
        subsearch::save_libsvm(gen_out, ds);
      } catch (const std::exception& e) {
        throw RuntimeFailure(e.what());
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
