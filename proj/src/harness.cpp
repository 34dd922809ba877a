#include "subsearch/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "subsearch/lcp_optimizers.hpp"
#include "subsearch/log_det.hpp"
#include "subsearch/matrix_factorization.hpp"
#include "subsearch/two_layer_net.hpp"

namespace subsearch {

namespace {

constexpr std::array<std::pair<ModelKind, std::string_view>, 6> kModels{{
    {ModelKind::logistic, "logistic"},
    {ModelKind::lsq, "lsq"},
    {ModelKind::net2, "net2"},
    {ModelKind::net2_reg, "net2_reg"},
    {ModelKind::matfact, "matfact"},
    {ModelKind::logdet, "logdet"},
}};

bool is_lcp(ModelKind m) { return m == ModelKind::logistic || m == ModelKind::lsq; }
bool is_net(ModelKind m) { return m == ModelKind::net2 || m == ModelKind::net2_reg; }

struct SyntheticSource {
  std::string kind;
  std::size_t n = 0;
  std::size_t d = 0;
};

std::optional<SyntheticSource> parse_synthetic(const std::string& data) {
  if (data.rfind("gen:", 0) != 0) return std::nullopt;
  const std::size_t colon = data.find(':', 4);
  const std::size_t x = data.find('x', colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || x == std::string::npos)
    throw ConfigError("synthetic data must look like gen:<kind>:<n>x<d>, got '" + data + "'");
  SyntheticSource s;
  s.kind = data.substr(4, colon - 4);
  if (s.kind != "logistic" && s.kind != "quadratic")
    throw ConfigError("unknown synthetic kind '" + s.kind + "' (logistic, quadratic)");
  char* end = nullptr;
  const std::string ns = data.substr(colon + 1, x - colon - 1);
  const std::string ds = data.substr(x + 1);
  s.n = std::strtoull(ns.c_str(), &end, 10);
  if (ns.empty() || *end != '\0') throw ConfigError("bad n in '" + data + "'");
  s.d = std::strtoull(ds.c_str(), &end, 10);
  if (ds.empty() || *end != '\0') throw ConfigError("bad d in '" + data + "'");
  if (s.n == 0 || s.d == 0) throw ConfigError("n and d must be positive in '" + data + "'");
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

DenseMatrix covariance(const DenseMatrix& X) {
  const std::size_t n = X.rows(), d = X.cols();
  DenseMatrix S(d, d);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) S(i, j) += X(k, i) * X(k, j);
  for (double& v : S.values()) v /= static_cast<double>(n);
  return S;
}

class Timer {
 public:
  explicit Timer(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  void mark(std::vector<double>& out) const {
    if (!on_) return;
    out.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

DenseMatrix mul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  MfProductCounter c;
  return c.mul_nt(a, b);
}

}  // namespace

std::string_view model_name(ModelKind m) {
  for (const auto& [k, n] : kModels)
    if (k == m) return n;
  return "?";
}

std::optional<ModelKind> parse_model(std::string_view name) {
  for (const auto& [k, n] : kModels)
    if (n == name) return k;
  return std::nullopt;
}

const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> all = [] {
    std::vector<ModelKind> v;
    for (const auto& [k, n] : kModels) v.push_back(k);
    return v;
  }();
  return all;
}

std::vector<std::string> methods_for(ModelKind m) {
  std::vector<std::string> out;
  if (is_lcp(m))
    for (LcpMethod x : all_lcp_methods()) out.emplace_back(method_name(x));
  else if (is_net(m))
    for (NetMethod x : all_net_methods()) out.emplace_back(net_method_name(x));
  else if (m == ModelKind::matfact)
    for (MfScheme x : all_mf_schemes()) out.emplace_back(mf_scheme_name(x));
  else
    for (LogDetMethod x : all_logdet_methods()) out.emplace_back(logdet_method_name(x));
  return out;
}

void validate(const ExperimentConfig& c) {
  if (c.data.empty()) throw ConfigError("no data source given");
  parse_synthetic(c.data);
  const auto names = methods_for(c.model);
  if (std::find(names.begin(), names.end(), c.method) == names.end())
    throw ConfigError("unknown method '" + c.method + "' for model " +
                      std::string(model_name(c.model)) + "; methods: " + join(names));
  if (!c.lambda.empty()) {
    if (!is_lcp(c.model) && !is_net(c.model))
      throw ConfigError("lambda applies to the logistic, lsq and net2 models only");
    resolve_lambda(c, 1);
  }
  if (c.hidden && *c.hidden == 0) throw ConfigError("hidden must be positive");
}

std::size_t resolve_hidden(const ExperimentConfig& c, std::size_t n, std::size_t d) {
  if (c.model != ModelKind::matfact) return c.hidden.value_or(100);
  const std::size_t cap = std::min(n, d);
  if (c.hidden && *c.hidden > cap)
    throw ConfigError("rank " + std::to_string(*c.hidden) + " exceeds min(n, d) = " +
                      std::to_string(cap));
  return c.hidden.value_or(std::min<std::size_t>(10, cap));
}

double resolve_lambda(const ExperimentConfig& c, std::size_t n) {
  std::string text = c.lambda;
  if (text.empty()) text = c.model == ModelKind::net2_reg ? "1/n" : "0";
  if (text == "1/n") return 1.0 / static_cast<double>(n);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (*end != '\0' || !std::isfinite(v) || v < 0.0)
    throw ConfigError("lambda must be 0, 1/n or a non-negative number, got '" + text + "'");
  return v;
}

Dataset load_data(const ExperimentConfig& c) {
  Dataset ds = [&] {
    if (auto s = parse_synthetic(c.data))
      return s->kind == "logistic" ? gen_logistic(s->n, s->d, c.seed)
                                   : gen_quadratic(s->n, s->d, c.seed);
    return load_libsvm(c.data);
  }();
  return c.standardize ? standardize(ds) : ds;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  validate(c);
  const Dataset ds = load_data(c);
  ExperimentResult res;
  const Timer timer(c.timing);
  auto& el = res.elapsed_s;

  if (is_lcp(c.model)) {
    const LcpObjective obj(ds, c.model == ModelKind::logistic ? LossKind::logistic
                                                              : LossKind::least_squares,
                           resolve_lambda(c, ds.n()));
    MarginState s = make_state(obj, Vector(ds.d(), 0.0));
    RunOptions o;
    o.on_step = [&](std::size_t, const StepRecord&, const MarginState&) { timer.mark(el); };
    res.trace = run(obj, *parse_lcp_method(c.method), s, c.iters, o);
  } else if (is_net(c.model)) {
    const NetObjective obj(ds, resolve_lambda(c, ds.n()));
    NetState s = make_net_state(obj, init_params(ds.d(), resolve_hidden(c, ds.n(), ds.d()), c.seed));
    NetRunOptions o;
    o.on_step = [&](std::size_t, const StepRecord&, const NetState&) { timer.mark(el); };
    res.trace = run_net(obj, *parse_net_method(c.method), s, c.iters, o);
  } else if (c.model == ModelKind::matfact) {
    const DenseMatrix X = ds.X.to_dense();
    auto [U, W] =
        init_factors(X.rows(), X.cols(), resolve_hidden(c, X.rows(), X.cols()), c.seed);
    MfState s = make_mf_state(X, std::move(U), std::move(W));
    MfRunOptions o;
    o.on_step = [&](std::size_t, const StepRecord&, const MfState&) { timer.mark(el); };
    res.trace = run_mf(X, *parse_mf_scheme(c.method), s, c.iters, o);
  } else {
    SpdState s = make_spd_state(covariance(ds.X.to_dense()), DenseMatrix::identity(ds.d()),
                                c.seed);
    LogDetRunOptions o;
    o.on_step = [&](std::size_t, const StepRecord&, const SpdState&) { timer.mark(el); };
    res.trace = run_logdet(s, *parse_logdet_method(c.method), c.iters, o);
  }
  return res;
}

double compute_reference(const ExperimentConfig& c, std::size_t iterations) {
  if (c.data.empty()) throw ConfigError("no data source given");
  if (!c.lambda.empty()) resolve_lambda(c, 1);
  const Dataset ds = load_data(c);
  if (c.model == ModelKind::logdet) {
    const auto chol = Cholesky::try_factor(covariance(ds.X.to_dense()));
    if (!chol)
      throw std::runtime_error("covariance is singular; the log-det objective is unbounded below");
    return static_cast<double>(ds.d()) + chol->logdet();
  }

  SubProblem sp;
  Vector x0;
  // Kept alive for the lambdas below.
  std::optional<LcpObjective> lcp;
  std::optional<NetObjective> net;
  DenseMatrix X;
  if (is_lcp(c.model)) {
    lcp.emplace(ds, c.model == ModelKind::logistic ? LossKind::logistic : LossKind::least_squares,
                resolve_lambda(c, ds.n()));
    x0.assign(ds.d(), 0.0);
    sp.value_and_gradient = [&](std::span<const double> w, std::span<double> g) {
      const Vector grad = lcp->f_grad(w);
      std::copy(grad.begin(), grad.end(), g.begin());
      return lcp->f_value(w);
    };
  } else if (is_net(c.model)) {
    net.emplace(ds, resolve_lambda(c, ds.n()));
    const NetParams p0 = init_params(ds.d(), resolve_hidden(c, ds.n(), ds.d()), c.seed);
    x0.assign(p0.W.values().begin(), p0.W.values().end());
    x0.insert(x0.end(), p0.v.begin(), p0.v.end());
    const std::size_t d = ds.d(), r = resolve_hidden(c, ds.n(), ds.d());
    sp.value_and_gradient = [&, d, r](std::span<const double> x, std::span<double> g) {
      NetParams p{DenseMatrix(d, r, Vector(x.begin(), x.begin() + d * r)),
                  Vector(x.begin() + d * r, x.end())};
      const DenseMatrix M = mat_mat(net->X(), p.W);
      const NetGradient grad = net->gradient_cached(p, M);
      std::copy(grad.W.values().begin(), grad.W.values().end(), g.begin());
      std::copy(grad.v.begin(), grad.v.end(), g.begin() + d * r);
      return net->value_cached(p, M);
    };
  } else {
    X = ds.X.to_dense();
    const std::size_t n = X.rows(), d = X.cols(), r = resolve_hidden(c, n, d);
    auto [U0, W0] = init_factors(n, d, r, c.seed);
    x0.assign(U0.values().begin(), U0.values().end());
    x0.insert(x0.end(), W0.values().begin(), W0.values().end());
    sp.value_and_gradient = [&, n, d, r](std::span<const double> x, std::span<double> g) {
      const DenseMatrix U(n, r, Vector(x.begin(), x.begin() + n * r));
      const DenseMatrix W(d, r, Vector(x.begin() + n * r, x.end()));
      const auto [gU, gW] = mf_gradient(U, W, X);
      std::copy(gU.values().begin(), gU.values().end(), g.begin());
      std::copy(gW.values().begin(), gW.values().end(), g.begin() + n * r);
      return pca_value(mul_nt(U, W), X);
    };
  }
  sp.dim = x0.size();
  sp.value = [&](std::span<const double> x) {
    Vector g(sp.dim);
    return sp.value_and_gradient(x, g);
  };

  SubSolverOptions o;
  o.max_iters = iterations;
  o.grad_tol = 0.0;
  o.stall_window = 0;
  o.coordinate_cap = std::numeric_limits<double>::infinity();
  const Vector zero(sp.dim, 0.0);
  // The solver works on offsets from x0.
  SubProblem shifted;
  shifted.dim = sp.dim;
  Vector buf(sp.dim);
  shifted.value_and_gradient = [&](std::span<const double> t, std::span<double> g) {
    for (std::size_t i = 0; i < sp.dim; ++i) buf[i] = x0[i] + t[i];
    return sp.value_and_gradient(buf, g);
  };
  shifted.value = [&](std::span<const double> t) {
    Vector g(sp.dim);
    return shifted.value_and_gradient(t, g);
  };
  const SubSolveResult r = solve(shifted, o, zero);
  if (!std::isfinite(r.value))
    throw std::runtime_error("reference run reached no finite value (last: " +
                             std::to_string(r.value_at_zero) + ")");
  return r.value;
}

std::vector<CsvRow> trace_rows(const Trace& t, std::optional<double> fstar,
                               const std::vector<double>& elapsed_s) {
  std::vector<CsvRow> rows;
  std::uint64_t cum = 0;
  for (std::size_t k = 0; k <= t.steps.size(); ++k) {
    CsvRow row;
    row.iter = k;
    row.f = k == 0 ? t.f0 : t.steps[k - 1].f;
    row.gnorm = k < t.steps.size() ? t.steps[k].grad_norm : t.final_grad_norm;
    if (k > 0) {
      const StepRecord& s = t.steps[k - 1];
      cum += s.products;
      row.steps = s.steps;
      row.inner_iters = s.inner_iters;
    }
    row.products_cum = cum;
    if (fstar) row.subopt = row.f - *fstar;
    if (!elapsed_s.empty()) row.elapsed_s = k == 0 ? 0.0 : elapsed_s.at(k - 1);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ParseError(line, "bad number '" + s + "'");
  return v;
}

std::optional<double> parse_opt(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, line);
}

std::uint64_t parse_uint(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || s[0] == '-') throw ParseError(line, "bad count '" + s + "'");
  return v;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const CsvRow& r : rows) {
    out << r.iter << ',' << num(r.f) << ',' << opt(r.subopt) << ',' << num(r.gnorm) << ','
        << r.products_cum << ',' << opt(r.steps.alpha1) << ',' << opt(r.steps.beta1) << ','
        << opt(r.steps.alpha2) << ',' << opt(r.steps.beta2) << ',' << opt(r.steps.gamma) << ','
        << opt(r.steps.delta) << ',' << r.inner_iters << ',' << opt(r.elapsed_s) << '\n';
  }
}

std::vector<CsvRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw ParseError(1, "expected header '" + std::string(kCsvHeader) + "'");
  std::vector<CsvRow> rows;
  std::size_t no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 13) throw ParseError(no, "expected 13 fields, got " + std::to_string(c.size()));
    CsvRow r;
    r.iter = parse_uint(c[0], no);
    r.f = parse_double(c[1], no);
    r.subopt = parse_opt(c[2], no);
    r.gnorm = parse_double(c[3], no);
    r.products_cum = parse_uint(c[4], no);
    r.steps.alpha1 = parse_opt(c[5], no);
    r.steps.beta1 = parse_opt(c[6], no);
    r.steps.alpha2 = parse_opt(c[7], no);
    r.steps.beta2 = parse_opt(c[8], no);
    r.steps.gamma = parse_opt(c[9], no);
    r.steps.delta = parse_opt(c[10], no);
    r.inner_iters = parse_uint(c[11], no);
    r.elapsed_s = parse_opt(c[12], no);
    rows.push_back(r);
  }
  return rows;
}

namespace {

constexpr double kWidth = 760, kHeight = 480;
constexpr double kLeft = 70, kRight = 200, kTop = 20, kBottom = 50;
constexpr std::array<std::string_view, 10> kColors{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

/// Plot frame with linear x over [0, xmax] and y over [ylo, yhi] in log10 units.
struct Frame {
  double xmax = 1, ylo = 0, yhi = 1;
  double px(double x) const { return kLeft + (kWidth - kLeft - kRight) * x / xmax; }
  double py(double y) const {
    return kTop + (kHeight - kTop - kBottom) * (yhi - y) / (yhi - ylo);
  }
};

Frame make_frame(double xmax, double ylo, double yhi) {
  Frame f;
  f.xmax = std::max(1.0, xmax);
  if (!(ylo < yhi)) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  f.ylo = std::floor(ylo);
  f.yhi = std::ceil(yhi);
  if (f.ylo == f.yhi) f.yhi += 1;
  return f;
}

void open_svg(std::ostream& out, const Frame& f, std::string_view ylabel) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  const double x0 = f.px(0), x1 = f.px(f.xmax), y0 = f.py(f.ylo), y1 = f.py(f.yhi);
  out << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(x1)
      << "\" y2=\"" << fixed(y0) << "\"/>\n"
      << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(x0)
      << "\" y2=\"" << fixed(y1) << "\"/>\n</g>\n";
  out << "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
  const double ystep = std::max(1.0, std::ceil((f.yhi - f.ylo) / 10));
  for (double y = f.ylo; y <= f.yhi + 1e-9; y += ystep)
    out << "<text x=\"" << fixed(x0 - 6) << "\" y=\"" << fixed(f.py(y) + 4)
        << "\" text-anchor=\"end\">1e" << static_cast<long>(y) << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double x = f.xmax * i / 5;
    out << "<text x=\"" << fixed(f.px(x)) << "\" y=\"" << fixed(y0 + 16)
        << "\" text-anchor=\"middle\">" << std::lround(x) << "</text>\n";
  }
  out << "<text x=\"" << fixed((x0 + x1) / 2) << "\" y=\"" << fixed(kHeight - 10)
      << "\" text-anchor=\"middle\">iteration</text>\n"
      << "<text x=\"14\" y=\"" << fixed((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << fixed((y0 + y1) / 2) << ")\">" << escape(ylabel) << "</text>\n</g>\n";
}

void legend_entry(std::ostream& out, std::size_t slot, std::string_view color, bool dashed,
                  std::string_view label) {
  const double y = kTop + 10 + 16 * static_cast<double>(slot);
  const double x = kWidth - kRight + 15;
  out << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(x + 24)
      << "\" y2=\"" << fixed(y) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (dashed ? " stroke-dasharray=\"6,3\"" : "") << "/>\n"
      << "<text x=\"" << fixed(x + 30) << "\" y=\"" << fixed(y + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(label) << "</text>\n";
}

}  // namespace

void emit_subopt_svg(std::ostream& out, const std::vector<PlotSeries>& series, double fstar) {
  const auto y_of = [&](double f) { return std::log10(std::max(f - fstar, 1e-16)); };
  double xmax = 0, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : series)
    for (const auto& r : s.rows) {
      xmax = std::max(xmax, static_cast<double>(r.iter));
      if (!std::isfinite(r.f)) continue;
      ylo = std::min(ylo, y_of(r.f));
      yhi = std::max(yhi, y_of(r.f));
    }
  if (!std::isfinite(ylo)) ylo = yhi = 0;
  const Frame fr = make_frame(xmax, ylo, yhi);
  open_svg(out, fr, "f - f*");
  out << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    legend_entry(out, i, kColors[i % kColors.size()], false, series[i].name);
  out << "</g>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << "<polyline class=\"series\" data-name=\"" << escape(series[i].name)
        << "\" fill=\"none\" stroke=\"" << kColors[i % kColors.size()]
        << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& r : series[i].rows) {
      if (!std::isfinite(r.f)) continue;
      out << (first ? "" : " ") << fixed(fr.px(static_cast<double>(r.iter))) << ','
          << fixed(fr.py(y_of(r.f)));
      first = false;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

void emit_steps_svg(std::ostream& out, const std::vector<PlotSeries>& series) {
  struct Slot {
    std::string_view name;
    std::optional<double> StepSizes::*field;
    bool momentum;
  };
  static constexpr std::array<Slot, 6> kSlots{{
      {"alpha1", &StepSizes::alpha1, false},
      {"beta1", &StepSizes::beta1, true},
      {"alpha2", &StepSizes::alpha2, false},
      {"beta2", &StepSizes::beta2, true},
      {"gamma", &StepSizes::gamma, true},
      {"delta", &StepSizes::delta, false},
  }};
  const auto usable = [](const std::optional<double>& v) {
    return v && std::isfinite(*v) && *v != 0.0;
  };

  double xmax = 0, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : series)
    for (const auto& r : s.rows) {
      xmax = std::max(xmax, static_cast<double>(r.iter));
      for (const Slot& slot : kSlots) {
        const auto& v = r.steps.*slot.field;
        if (!usable(v)) continue;
        ylo = std::min(ylo, std::log10(std::abs(*v)));
        yhi = std::max(yhi, std::log10(std::abs(*v)));
      }
    }
  if (!std::isfinite(ylo)) ylo = yhi = 0;
  const Frame fr = make_frame(xmax, ylo, yhi);
  open_svg(out, fr, "|step|");

  std::size_t entry = 0;
  std::ostringstream legend, body;
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (const Slot& slot : kSlots) {
      const bool present = std::any_of(series[i].rows.begin(), series[i].rows.end(),
                                       [&](const CsvRow& r) { return usable(r.steps.*slot.field); });
      if (!present) continue;
      const std::string_view color = kColors[entry % kColors.size()];
      const std::string label = series[i].name + " " + std::string(slot.name);
      legend_entry(legend, entry, color, slot.momentum, label);
      ++entry;

      body << "<path class=\"step-series\" data-name=\"" << escape(label)
           << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
           << (slot.momentum ? " stroke-dasharray=\"6,3\"" : "") << " d=\"";
      bool pen_down = false;
      for (const auto& r : series[i].rows) {
        const auto& v = r.steps.*slot.field;
        if (!usable(v)) {
          pen_down = false;
          continue;
        }
        body << (pen_down ? " L" : " M") << fixed(fr.px(static_cast<double>(r.iter))) << ','
             << fixed(fr.py(std::log10(std::abs(*v))));
        pen_down = true;
      }
      body << "\"/>\n";
      for (const auto& r : series[i].rows) {
        const auto& v = r.steps.*slot.field;
        if (!usable(v) || *v > 0.0) continue;
        body << "<circle class=\"neg\" data-series=\"" << escape(label) << "\" cx=\""
             << fixed(fr.px(static_cast<double>(r.iter))) << "\" cy=\""
             << fixed(fr.py(std::log10(std::abs(*v)))) << "\" r=\"3\" fill=\"none\" stroke=\""
             << color << "\"/>\n";
      }
    }
  }
  out << "<g class=\"legend\">\n" << legend.str() << "</g>\n" << body.str() << "</svg>\n";
}

}  // namespace subsearch
