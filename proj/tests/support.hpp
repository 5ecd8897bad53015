#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "tolalloc/rng.hpp"
#include "tolalloc/worst_case.hpp"

namespace testing_support {

using tolalloc::Vector;

// G(tau) = sum_i a_i tau_i^2, the worst case of a quadratic bowl.
inline tolalloc::AnalyticWorstCase quadratic_G(Vector a) {
  const int d = static_cast<int>(a.size());
  return tolalloc::AnalyticWorstCase(
      d, [a](const Vector& t) { return (a.array() * t.array().square()).sum(); },
      [a](const Vector& t) { return Vector(2.0 * a.array() * t.array()); });
}

// G(tau) = sum_i tau_i.
inline tolalloc::AnalyticWorstCase flat_G(int d) {
  return tolalloc::AnalyticWorstCase(
      d, [](const Vector& t) { return t.sum(); }, [](const Vector& t) { return Vector(Vector::Ones(t.size())); });
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Vector uniform_vector(tolalloc::CounterRng& rng, int d, double lo, double hi) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tolalloc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

/// Runs a shell command, capturing stdout and stderr together.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  FILE* f = std::fopen(p.c_str(), "wb");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

}  // namespace testing_support
