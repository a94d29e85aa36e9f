#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "aggrbench/memory.hpp"
#include "aggrbench/parallel.hpp"

namespace aggr {

/// Dense row-major single-precision matrix; rows are vertices or edges.
/// Storage is tracked by the memory accountant.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  FeatureMatrix(std::size_t rows, std::size_t cols, std::span<const float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t bytes() const noexcept { return data_.size() * sizeof(float); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  /// Throws ValidationError on a non-finite entry.
  void validate_finite() const;

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  memory::tracked_vector<float> data_;
};

/// Combination weights, in_dim x out_dim row-major.
struct DenseWeights {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<float> data;

  float operator()(std::size_t i, std::size_t o) const noexcept { return data[i * out_dim + o]; }
  void validate() const;

  static DenseWeights identity(std::size_t dim);
  static DenseWeights zeros(std::size_t in_dim, std::size_t out_dim);
  /// Glorot-uniform initialisation from the counter RNG.
  static DenseWeights random(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed);
};

FeatureMatrix matmul(const FeatureMatrix& x, const DenseWeights& w, const ExecPolicy& policy = {});

/// Entries uniform in [-1, 1]; a pure function of (rows, cols, seed).
FeatureMatrix random_features(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Binary format: little-endian u64 rows, u64 cols, then rows*cols f32.
// Text format: one row per line, whitespace-separated values.
void write_features_binary(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_features_binary(std::istream& in);
void write_features_text(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_features_text(std::istream& in);

/// Reads either format; a file whose size matches its binary header is binary.
FeatureMatrix read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureMatrix& m, bool binary = true);

/// FNV-1a over the raw bytes of the values; used to compare outputs in reports.
std::uint64_t digest(const FeatureMatrix& m) noexcept;

}  // namespace aggr
