#include "subsearch/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>

#include "subsearch/random.hpp"

namespace subsearch {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Dataset make_dataset(CountedMatrix X, Vector y, LabelKind kind) {
  if (X.rows() != y.size())
    throw std::invalid_argument("dataset: " + std::to_string(X.rows()) + " rows but " +
                                std::to_string(y.size()) + " labels");
  if (!all_finite(y)) throw std::invalid_argument("dataset: non-finite label");
  if (kind == LabelKind::binary) {
    for (double v : y)
      if (v != 1.0 && v != -1.0) throw std::invalid_argument("dataset: binary labels must be +-1");
  }
  return Dataset{std::move(X), std::move(y), kind};
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  Vector labels;
  std::size_t max_index = 0;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      const std::size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
      return line.substr(start, pos - start);
    };

    const auto label_token = next_token();
    double label = 0.0;
    if (!parse_number(label_token, label) || !std::isfinite(label))
      throw ParseError(line_no, "malformed label '" + std::string(label_token) + "'");
    labels.push_back(label);

    std::size_t previous = 0;
    for (auto token = next_token(); !token.empty(); token = next_token()) {
      const auto colon = token.find(':');
      if (colon == std::string_view::npos)
        throw ParseError(line_no, "expected idx:val, got '" + std::string(token) + "'");
      std::size_t index = 0;
      double value = 0.0;
      if (!parse_number(token.substr(0, colon), index) || index == 0)
        throw ParseError(line_no, "malformed feature index in '" + std::string(token) + "'");
      if (!parse_number(token.substr(colon + 1), value) || !std::isfinite(value))
        throw ParseError(line_no, "malformed feature value in '" + std::string(token) + "'");
      if (index <= previous)
        throw ParseError(line_no, "feature indices must be strictly increasing (" +
                                      std::to_string(index) + " after " +
                                      std::to_string(previous) + ")");
      previous = index;
      max_index = std::max(max_index, index);
      if (value != 0.0) {
        col_idx.push_back(index - 1);
        values.push_back(value);
      }
    }
    row_ptr.push_back(values.size());
  }

  const std::size_t d = std::max(max_index, opts.num_features);
  SparseMatrix X(labels.size(), d, std::move(row_ptr), std::move(col_idx), std::move(values));

  std::set<double> distinct(labels.begin(), labels.end());
  LabelKind kind = LabelKind::real;
  if (distinct.size() == 2) {
    const double low = *distinct.begin();
    for (double& v : labels) v = (v == low) ? -1.0 : 1.0;
    kind = LabelKind::binary;
  }
  return make_dataset(CountedMatrix(std::move(X)), std::move(labels), kind);
}

Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return parse_libsvm(in, opts);
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_libsvm(std::ostream& out, const Dataset& ds) {
  const auto emit_row = [&](std::size_t i, auto&& for_each_entry) {
    if (ds.label_kind == LabelKind::binary)
      out << (ds.y[i] > 0 ? "+1" : "-1");
    else
      put_double(out, ds.y[i]);
    for_each_entry([&](std::size_t j, double v) {
      out << ' ' << (j + 1) << ':';
      put_double(out, v);
    });
    out << '\n';
  };

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        for (std::size_t i = 0; i < m.rows(); ++i) {
          emit_row(i, [&](auto&& sink) {
            if constexpr (std::is_same_v<T, DenseMatrix>) {
              for (std::size_t j = 0; j < m.cols(); ++j)
                if (m(i, j) != 0.0) sink(j, m(i, j));
            } else {
              for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
                sink(m.col_idx()[k], m.values()[k]);
            }
          });
        }
      },
      ds.X.payload());
}

void save_libsvm(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_libsvm(out, ds);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Dataset standardize(const Dataset& ds) {
  DenseMatrix X = ds.X.to_dense();
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean += X(i, j);
      scale = std::max(scale, std::abs(X(i, j)));
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (X(i, j) - mean) * (X(i, j) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    // Rounding leaves a residue of order eps*|x| in constant columns.
    const bool constant = sd <= 1e-12 * scale || sd == 0.0;
    for (std::size_t i = 0; i < n; ++i) X(i, j) = constant ? 0.0 : (X(i, j) - mean) / sd;
  }
  return make_dataset(CountedMatrix(std::move(X)), ds.y, ds.label_kind);
}

namespace {

std::vector<double> column_scales(std::size_t d, double condition_scale) {
  std::vector<double> scales(d, 1.0);
  if (d > 1) {
    for (std::size_t j = 0; j < d; ++j)
      scales[j] = std::pow(condition_scale, static_cast<double>(j) / static_cast<double>(d - 1));
  }
  return scales;
}

}  // namespace

Dataset gen_logistic(std::size_t n, std::size_t d, std::uint64_t seed, double condition_scale) {
  if (n == 0 || d == 0) throw std::invalid_argument("gen_logistic: n and d must be positive");
  if (!(condition_scale >= 1.0))
    throw std::invalid_argument("gen_logistic: condition_scale must be >= 1");
  Rng rng(seed);
  const auto scales = column_scales(d, condition_scale);
  DenseMatrix X(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.normal() * scales[j];
  Vector w_true(d);
  for (double& w : w_true) w = rng.normal();
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double margin = dot(X.row(i), w_true);
    y[i] = margin >= 0.0 ? 1.0 : -1.0;
    if (rng.uniform() < 0.1) y[i] = -y[i];
  }
  return make_dataset(CountedMatrix(std::move(X)), std::move(y), LabelKind::binary);
}

Dataset gen_quadratic(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("gen_quadratic: n and d must be positive");
  Rng rng(seed);
  DenseMatrix X(n, d);
  for (double& v : X.values()) v = rng.normal();
  Vector w_true(d);
  for (double& w : w_true) w = rng.normal();
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = dot(X.row(i), w_true) + 0.1 * rng.normal();
  return make_dataset(CountedMatrix(std::move(X)), std::move(y), LabelKind::real);
}

}  // namespace subsearch
