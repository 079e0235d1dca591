#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pathline/common.hpp"

namespace pathline {

enum class Split { Train, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// Feature matrix with train rows first, then test rows. Immutable by
// convention: transforms return new Datasets.
struct Dataset {
  Eigen::MatrixXd features;  // (n_train + n_test) x d
  std::vector<int> labels;   // class indices in [0, num_classes)
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  int num_classes = 2;
  std::string provenance;  // generator call plus any transform chain

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }

  Eigen::Ref<const Eigen::MatrixXd> train_features() const {
    return features.topRows(static_cast<Eigen::Index>(n_train));
  }
  Eigen::Ref<const Eigen::MatrixXd> test_features() const {
    return features.bottomRows(static_cast<Eigen::Index>(n_test));
  }
  std::vector<int> train_labels() const {
    return {labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_train)};
  }
  std::vector<int> test_labels() const {
    return {labels.begin() + static_cast<std::ptrdiff_t>(n_train), labels.end()};
  }

  // Per-class sample counts over one split.
  std::vector<std::size_t> class_counts(bool train_split) const;

  void validate() const;
  std::uint64_t digest() const;
};

struct AugmentSpec {
  enum class Kind { None, GaussianJitter };
  Kind kind = Kind::None;
  double sigma = 0.0;

  void validate() const;
  std::string to_string() const;  // "none" | "jitter:<sigma>"
  static AugmentSpec parse(const std::string& text);
  bool operator==(const AugmentSpec&) const = default;
};

// Noise-free point of the two-class spiral: radius 2*sqrt(t), angle
// 8*sqrt(t)*pi, with class 1 rotated by pi.
Eigen::Vector2d spiral_point(double t, int cls);

// Two interleaved spirals with Gaussian coordinate noise. Classes alternate
// row by row, so class 0 takes the odd-size remainder.
Dataset spiral(std::size_t n_train = 10000, std::size_t n_test = 5000,
               double sigma = 0.02, std::uint64_t seed = 0);

// Two isotropic Gaussian blobs at (-separation/2, 0) and (+separation/2, 0).
Dataset blobs(std::size_t n_train, std::size_t n_test, double separation,
              double sigma, std::uint64_t seed);

// Resamples the labels of round(p * n_train) distinct train rows uniformly
// over all classes (coincidental matches allowed). Features and the test
// split are untouched.
Dataset corrupt_labels(const Dataset& data, double p, std::uint64_t seed);

// Keeps ceil(fraction * n_train) train rows, stratified by class (largest
// remainder, within one sample of exact proportionality); the test split is
// kept whole. fraction = 1 returns a verbatim copy.
Dataset subset(const Dataset& data, double fraction, std::uint64_t seed);

// Fresh Gaussian jitter per presentation; sigma = 0 or kind None returns the
// batch unchanged without consuming the stream.
Eigen::MatrixXd augment(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                        const AugmentSpec& spec, RngStream& stream);

// CSV with "# key: value" metadata comments, then a header row of feature
// columns plus "label". Doubles render in shortest round-trip form, so
// export -> import -> export is byte-stable.
void export_csv(const Dataset& data, const std::filesystem::path& path);
Dataset import_csv(const std::filesystem::path& path);

}  // namespace pathline
