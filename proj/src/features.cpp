#include "aggrbench/features.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "aggrbench/error.hpp"
#include "aggrbench/random.hpp"

namespace aggr {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::span<const float> values)
    : rows_(rows), cols_(cols) {
  if (values.size() != rows * cols) {
    throw ValidationError("feature matrix: " + std::to_string(values.size()) + " values for a " +
                          std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  }
  data_.assign(values.begin(), values.end());
}

void FeatureMatrix::validate_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError("feature matrix: non-finite entry at row " + std::to_string(i / cols_) +
                            ", column " + std::to_string(i % cols_));
    }
  }
}

void DenseWeights::validate() const {
  if (data.size() != in_dim * out_dim) {
    throw ValidationError("dense weights: " + std::to_string(data.size()) + " values for " +
                          std::to_string(in_dim) + "x" + std::to_string(out_dim));
  }
}

DenseWeights DenseWeights::identity(std::size_t dim) {
  DenseWeights w{dim, dim, std::vector<float>(dim * dim, 0.0f)};
  for (std::size_t i = 0; i < dim; ++i) w.data[i * dim + i] = 1.0f;
  return w;
}

DenseWeights DenseWeights::zeros(std::size_t in_dim, std::size_t out_dim) {
  return {in_dim, out_dim, std::vector<float>(in_dim * out_dim, 0.0f)};
}

DenseWeights DenseWeights::random(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed) {
  DenseWeights w{in_dim, out_dim, std::vector<float>(in_dim * out_dim)};
  const double bound = in_dim + out_dim > 0 ? std::sqrt(6.0 / static_cast<double>(in_dim + out_dim)) : 0.0;
  CounterRng rng(seed, 0x57E1647Bull);
  for (auto& v : w.data) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
  return w;
}

FeatureMatrix matmul(const FeatureMatrix& x, const DenseWeights& w, const ExecPolicy& policy) {
  w.validate();
  if (x.cols() != w.in_dim) {
    throw ContractError("matmul: input has " + std::to_string(x.cols()) + " columns but weights expect " +
                        std::to_string(w.in_dim));
  }
  FeatureMatrix out(x.rows(), w.out_dim);
  const std::size_t k_dim = w.in_dim;
  const std::size_t n_dim = w.out_dim;
  parallel_for_ranges(x.rows(), policy.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const float* xr = x.data() + r * k_dim;
      float* orow = out.data() + r * n_dim;
      for (std::size_t k = 0; k < k_dim; ++k) {
        const float a = xr[k];
        if (a == 0.0f) continue;
        const float* wr = w.data.data() + k * n_dim;
        for (std::size_t c = 0; c < n_dim; ++c) orow[c] += a * wr[c];
      }
    }
  });
  return out;
}

FeatureMatrix random_features(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  FeatureMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    CounterRng rng(seed, r);
    auto row = m.row(r);
    for (auto& v : row) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
  }
  return m;
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary feature I/O assumes a little-endian host");

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw ValidationError("feature file: truncated header");
  return v;
}

}  // namespace

void write_features_binary(std::ostream& out, const FeatureMatrix& m) {
  write_u64(out, m.rows());
  write_u64(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.bytes()));
}

FeatureMatrix read_features_binary(std::istream& in) {
  const auto rows = read_u64(in);
  const auto cols = read_u64(in);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) throw ValidationError("feature file: implausible shape");
  FeatureMatrix m(rows, cols);
  if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.bytes()))) {
    throw ValidationError("feature file: expected " + std::to_string(rows * cols) + " values");
  }
  m.validate_finite();
  return m;
}

void write_features_text(std::ostream& out, const FeatureMatrix& m) {
  char buf[64];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), m(r, c));
      if (c) line += ' ';
      line.append(buf, p);
    }
    line += '\n';
    out << line;
  }
}

FeatureMatrix read_features_text(std::istream& in) {
  std::vector<float> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string tok;
    std::size_t count = 0;
    while (fields >> tok) {
      float v = 0.0f;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || p != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ValidationError("feature text line " + std::to_string(line_no) + ": invalid value `" + tok + "`");
      }
      values.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      throw ValidationError("feature text line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                            " values, got " + std::to_string(count));
    }
    ++rows;
  }
  return FeatureMatrix(rows, cols, values);
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string());
  const auto size = std::filesystem::file_size(path);
  if (size >= 16) {
    std::uint64_t header[2];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    const bool plausible = header[1] != 0 && header[0] <= (size - 16) / 4 / header[1];
    if (plausible && 16 + header[0] * header[1] * 4 == size) {
      in.seekg(0);
      return read_features_binary(in);
    }
    in.clear();
    in.seekg(0);
  }
  return read_features_text(in);
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& m, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file " + path.string());
  if (binary) {
    write_features_binary(out, m);
  } else {
    write_features_text(out, m);
  }
  if (!out) throw IoError("failed while writing feature file " + path.string());
}

std::uint64_t digest(const FeatureMatrix& m) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ull;
    }
  };
  const std::uint64_t shape[2] = {m.rows(), m.cols()};
  mix(shape, sizeof(shape));
  mix(m.data(), m.bytes());
  return h;
}

}  // namespace aggr
