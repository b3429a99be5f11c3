#pragma once

#include "kiqr/dataset.hpp"
#include "kiqr/rng.hpp"

#include <boost/random/normal_distribution.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

namespace kiqr::testing {

inline Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  CounterRng rng(seed, 99);
  boost::random::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Vector gaussian_vector(Index size, std::uint64_t seed) { return gaussian_matrix(size, 1, seed).col(0); }

inline Dataset make_dataset(Matrix X, Vector y) {
  Dataset ds;
  ds.feature_names = default_feature_names(X.cols());
  ds.X = std::move(X);
  ds.y = std::move(y);
  ds.validate();
  return ds;
}

/// Sparse linear model y = X beta + noise with beta_j = signal for j < s.
inline Dataset sparse_linear(Index n, Index d, Index s, double signal, double noise, std::uint64_t seed) {
  Matrix X = gaussian_matrix(n, d, seed);
  Vector beta = Vector::Zero(d);
  beta.head(s).setConstant(signal);
  Vector y = X * beta + noise * gaussian_vector(n, seed + 1);
  return make_dataset(std::move(X), std::move(y));
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("kiqr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

  std::string write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace kiqr::testing
