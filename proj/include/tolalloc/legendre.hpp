#pragma once

#include <Eigen/Core>

#include <cmath>

#include "tolalloc/types.hpp"

namespace tolalloc {

inline constexpr double kLegendreDomainSlack = 1e-12;

namespace detail {
inline void check_legendre_arg(double x) {
  if (!(std::abs(x) <= 1.0 + kLegendreDomainSlack)) {
    throw DomainError("Legendre argument outside [-1, 1]: " + std::to_string(x));
  }
}
}  // namespace detail

/// L_0..L_p at x via (n+1) L_{n+1} = (2n+1) x L_n - n L_{n-1}.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> legendre_values(int p, Scalar x) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(p + 1);
  out(0) = Scalar(1);
  if (p >= 1) out(1) = x;
  for (int n = 1; n < p; ++n) {
    out(n + 1) = (Scalar(2 * n + 1) * x * out(n) - Scalar(n) * out(n - 1)) / Scalar(n + 1);
  }
  return out;
}

/// Derivatives L'_0..L'_p from L'_{n+1} = L'_{n-1} + (2n+1) L_n.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> legendre_derivatives(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& values) {
  const Eigen::Index p = values.size() - 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(p + 1);
  out(0) = Scalar(0);
  if (p >= 1) out(1) = Scalar(1);
  for (Eigen::Index n = 1; n < p; ++n) {
    out(n + 1) = out(n - 1) + Scalar(2 * n + 1) * values(n);
  }
  return out;
}

template <typename Scalar>
Scalar legendre_eval(int j, Scalar x) {
  detail::check_legendre_arg(static_cast<double>(x));
  return legendre_values<Scalar>(j, x)(j);
}

template <typename Scalar>
Scalar legendre_derivative(int j, Scalar x) {
  detail::check_legendre_arg(static_cast<double>(x));
  return legendre_derivatives<Scalar>(legendre_values<Scalar>(j, x))(j);
}

}  // namespace tolalloc
