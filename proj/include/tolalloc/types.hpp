#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace tolalloc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error taxonomy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class FitError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class ConstraintError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class RetractionError : public NumericError { using NumericError::NumericError; };
class InitializationError : public NumericError { using NumericError::NumericError; };
class DegenerateNormalError : public NumericError { using NumericError::NumericError; };

class EvaluatorError : public Error {
 public:
  EvaluatorError(const std::string& what, std::string raw_output = {})
      : Error(what), raw_output_(std::move(raw_output)) {}
  const std::string& raw_output() const noexcept { return raw_output_; }

 private:
  std::string raw_output_;
};

/// Closed interval of one design parameter.
struct Interval {
  double lo = -1.0;
  double hi = 1.0;

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo_ < hi_)) throw DomainError("Interval requires lo < hi");
  }
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  bool operator==(const Interval&) const = default;
};

using Intervals = std::vector<Interval>;

inline void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace tolalloc
