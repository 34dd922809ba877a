#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "subsearch/matrix.hpp"

namespace subsearch {

enum class LabelKind { binary, real };

/// n x d design matrix with its targets. Binary labels are exactly -1/+1.
struct Dataset {
  CountedMatrix X;
  Vector y;
  LabelKind label_kind = LabelKind::real;

  std::size_t n() const noexcept { return X.rows(); }
  std::size_t d() const noexcept { return X.cols(); }
};

/// Builds a Dataset, checking rows(X) == length(y), finite labels, and that
/// binary labels are +-1.
Dataset make_dataset(CountedMatrix X, Vector y, LabelKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct LibsvmOptions {
  /// Minimum feature count; d is max(num_features, largest index seen).
  std::size_t num_features = 0;
};

/// Reads `label idx:val ...` lines with 1-based strictly increasing indices.
/// Blank lines and `#` comments are skipped; explicit zeros are dropped.
/// When exactly two distinct label values occur they are mapped to -1 (the
/// smaller) and +1 (the larger) and the dataset is binary.
Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts = {});
Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts = {});

/// Writes nonzero entries with 17 significant digits, so parse(write(ds))
/// reproduces every value exactly.
void write_libsvm(std::ostream& out, const Dataset& ds);
void save_libsvm(const std::string& path, const Dataset& ds);

/// Column-wise centering and scaling to unit population standard deviation.
/// Columns with (numerically) zero variance become all zeros. Output is dense.
Dataset standardize(const Dataset& ds);

inline constexpr double kDefaultConditionScale = 50.0;

/// Gaussian features with column scales spread geometrically over
/// [1, condition_scale]; labels sign(X w_true) with 10% of them flipped.
Dataset gen_logistic(std::size_t n, std::size_t d, std::uint64_t seed,
                     double condition_scale = kDefaultConditionScale);

/// Gaussian features, y = X w_true + 0.1 * noise.
Dataset gen_quadratic(std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace subsearch
