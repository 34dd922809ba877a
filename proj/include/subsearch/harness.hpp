#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "subsearch/dataset.hpp"
#include "subsearch/trace.hpp"

namespace subsearch {

enum class ModelKind { logistic, lsq, net2, net2_reg, matfact, logdet };

std::string_view model_name(ModelKind m);
std::optional<ModelKind> parse_model(std::string_view name);
const std::vector<ModelKind>& all_models();
/// Every method name the model accepts, in registry order.
std::vector<std::string> methods_for(ModelKind m);

/// Invalid configuration; the CLI maps it to a usage error.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  /// A libsvm path, or "gen:<logistic|quadratic>:<n>x<d>" for synthetic data
  /// drawn with `seed`.
  std::string data;
  ModelKind model = ModelKind::logistic;
  std::string method;
  std::size_t iters = 100;
  std::uint64_t seed = 1;
  /// Hidden units for net2 (default 100) or the rank for matfact (default
  /// min(10, n, d)).
  std::optional<std::size_t> hidden;
  /// "0", "1/n" or a number. Empty means 1/n for net2_reg and 0 otherwise.
  std::string lambda;
  bool standardize = false;
  std::optional<double> fstar;
  bool timing = false;
};

/// Throws ConfigError when the method does not belong to the model or a
/// field is malformed. Does not touch the data source.
void validate(const ExperimentConfig& c);

double resolve_lambda(const ExperimentConfig& c, std::size_t n);
/// Throws ConfigError when a factorization rank exceeds min(n, d).
std::size_t resolve_hidden(const ExperimentConfig& c, std::size_t n, std::size_t d);

/// Loads or generates the data and applies standardization.
Dataset load_data(const ExperimentConfig& c);

struct ExperimentResult {
  Trace trace;
  /// Cumulative wall-clock seconds after each step; empty unless timing.
  std::vector<double> elapsed_s;
};

ExperimentResult run_experiment(const ExperimentConfig& c);

/// Non-monotone Barzilai-Borwein in the full parameter space (5000
/// iterations), started where the methods start; the lowest f seen. The
/// log-det model uses its closed form d + log|S|. Throws std::runtime_error
/// when no finite value is reached.
double compute_reference(const ExperimentConfig& c, std::size_t iterations = 5000);

inline constexpr std::string_view kCsvHeader =
    "iter,f,subopt,gnorm,products_cum,alpha1,beta1,alpha2,beta2,gamma,delta,inner_iters,elapsed_s";

struct CsvRow {
  std::size_t iter = 0;
  double f = 0.0;
  std::optional<double> subopt;
  double gnorm = 0.0;
  std::uint64_t products_cum = 0;
  StepSizes steps;
  std::size_t inner_iters = 0;
  std::optional<double> elapsed_s;
};

/// One row per iteration including iteration 0.
std::vector<CsvRow> trace_rows(const Trace& t, std::optional<double> fstar,
                               const std::vector<double>& elapsed_s = {});

/// 17 significant digits, blank cells for absent values, '\n' endings.
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
/// Throws ParseError on a malformed header or row.
std::vector<CsvRow> read_csv(std::istream& in);

struct PlotSeries {
  std::string name;
  std::vector<CsvRow> rows;
};

/// log10(f - fstar) against iteration, clamped below at 1e-16.
void emit_subopt_svg(std::ostream& out, const std::vector<PlotSeries>& series, double fstar);
/// |step| on a log scale. Learning rates are solid, momentum rates dashed;
/// each negative step gets a marker. Zero steps are left out.
void emit_steps_svg(std::ostream& out, const std::vector<PlotSeries>& series);

}  // namespace subsearch
