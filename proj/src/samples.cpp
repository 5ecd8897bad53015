#include "tolalloc/samples.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "tolalloc/io.hpp"

namespace tolalloc {

void SampleSet::validate() const {
  if (points.rows() != values.size()) {
    throw PreconditionError("sample set: points and values differ in length");
  }
  if (values.size() == 0) throw PreconditionError("sample set is empty");
  if (points.cols() == 0) throw PreconditionError("sample set has zero dimension");
  if (!points.allFinite() || !values.allFinite()) {
    throw NumericError("sample set contains non-finite entries");
  }
}

void SampleSet::check_inside(const Intervals& domain, double slack) const {
  check_dim(points.cols(), static_cast<Eigen::Index>(domain.size()), "sample set");
  for (Eigen::Index n = 0; n < points.rows(); ++n) {
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      const Interval& iv = domain[static_cast<std::size_t>(i)];
      const double pad = slack * iv.width();
      const double x = points(n, i);
      if (x < iv.lo - pad || x > iv.hi + pad) {
        throw DomainError("sample " + std::to_string(n) + " lies outside the sampling domain in mu_" +
                          std::to_string(i + 1));
      }
    }
  }
}

std::string format_samples_csv(const SampleSet& samples) {
  std::string out;
  const int d = samples.dim();
  for (int i = 0; i < d; ++i) out += "mu_" + std::to_string(i + 1) + ",";
  out += "q\n";
  for (Eigen::Index n = 0; n < samples.size(); ++n) {
    for (int i = 0; i < d; ++i) {
      out += format_double(samples.points(n, i));
      out += ',';
    }
    out += format_double(samples.values(n));
    out += '\n';
  }
  return out;
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = s.find_first_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b);
}
}  // namespace

SampleSet parse_samples_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("sample file is empty");
  const auto header = split_csv_line(strip(line));
  if (header.size() < 2) throw ParseError("sample header needs at least mu_1,q");
  const int d = static_cast<int>(header.size()) - 1;
  for (int i = 0; i < d; ++i) {
    if (strip(header[static_cast<std::size_t>(i)]) != "mu_" + std::to_string(i + 1)) {
      throw ParseError("sample header column " + std::to_string(i + 1) + " must be mu_" +
                       std::to_string(i + 1));
    }
  }
  if (strip(header.back()) != "q") throw ParseError("last sample header column must be q");

  std::vector<double> flat;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    try {
      for (const auto& f : fields) flat.push_back(parse_double(f));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    ++rows;
  }
  SampleSet s;
  s.points.resize(static_cast<Eigen::Index>(rows), d);
  s.values.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t n = 0; n < rows; ++n) {
    for (int i = 0; i < d; ++i) {
      s.points(static_cast<Eigen::Index>(n), i) = flat[n * (d + 1) + static_cast<std::size_t>(i)];
    }
    s.values(static_cast<Eigen::Index>(n)) = flat[n * (d + 1) + static_cast<std::size_t>(d)];
  }
  s.validate();
  return s;
}

SampleSet read_samples_csv(const std::filesystem::path& path) {
  return parse_samples_csv(read_text_file(path));
}

void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples) {
  write_file_atomic(path, format_samples_csv(samples));
}

}  // namespace tolalloc
