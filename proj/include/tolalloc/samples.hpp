#pragma once

#include <filesystem>
#include <string>

#include "tolalloc/types.hpp"

namespace tolalloc {

/// N design points (rows of `points`) with their quantity of interest.
struct SampleSet {
  Matrix points;  // N x dim
  Vector values;  // N

  int dim() const { return static_cast<int>(points.cols()); }
  Eigen::Index size() const { return values.size(); }

  /// Throws if shapes disagree, N == 0 or an entry is not finite.
  void validate() const;
  /// Throws DomainError if a point is outside the box (closed, with `slack`
  /// times the interval width).
  void check_inside(const Intervals& domain, double slack = 0.0) const;
};

/// CSV with header mu_1,...,mu_d,q and round-trip decimal formatting.
std::string format_samples_csv(const SampleSet& samples);
SampleSet parse_samples_csv(const std::string& text);

SampleSet read_samples_csv(const std::filesystem::path& path);
void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples);

}  // namespace tolalloc
