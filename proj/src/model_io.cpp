#include "tolalloc/model_io.hpp"

#include "tolalloc/io.hpp"

namespace tolalloc {

using nlohmann::json;

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + ": non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json intervals_to_json(const Intervals& intervals) {
  json out = json::array();
  for (const auto& iv : intervals) out.push_back({iv.lo, iv.hi});
  return out;
}

Intervals intervals_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("intervals: expected an array of [lo, hi] pairs");
  Intervals out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ParseError("intervals: each entry must be [lo, hi]");
    }
    out.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return out;
}

json model_to_json(const SeparatedModel& model) {
  json coeffs = json::array();
  for (int l = 0; l < model.rank(); ++l) {
    json per_dim = json::array();
    for (int i = 0; i < model.dim(); ++i) per_dim.push_back(vector_to_json(model.factor(l, i).transpose()));
    coeffs.push_back(std::move(per_dim));
  }
  return json{{"format_version", kModelFormatVersion},
              {"dim", model.dim()},
              {"rank", model.rank()},
              {"degree", model.degree()},
              {"intervals", intervals_to_json(model.intervals())},
              {"scales", vector_to_json(model.scales())},
              {"coeffs", std::move(coeffs)}};
}

SeparatedModel model_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw ParseError("model: unsupported format_version");
    }
    const int dim = j.at("dim").get<int>();
    const int rank = j.at("rank").get<int>();
    const int degree = j.at("degree").get<int>();
    Intervals intervals = intervals_from_json(j.at("intervals"));
    Vector scales = vector_from_json(j.at("scales"), "scales");
    const json& c = j.at("coeffs");
    if (static_cast<int>(intervals.size()) != dim || scales.size() != rank || !c.is_array() ||
        static_cast<int>(c.size()) != rank) {
      throw ParseError("model: field sizes disagree with dim/rank");
    }
    Matrix coeffs(static_cast<Eigen::Index>(rank) * dim, degree + 1);
    for (int l = 0; l < rank; ++l) {
      if (!c[l].is_array() || static_cast<int>(c[l].size()) != dim) {
        throw ParseError("model: coeffs[l] must have dim entries");
      }
      for (int i = 0; i < dim; ++i) {
        Vector row = vector_from_json(c[l][i], "coeffs");
        if (row.size() != degree + 1) throw ParseError("model: coeffs[l][i] must have degree+1 entries");
        coeffs.row(static_cast<Eigen::Index>(l) * dim + i) = row.transpose();
      }
    }
    return SeparatedModel(std::move(intervals), std::move(scales), std::move(coeffs));
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const SeparatedModel& model) {
  write_file_atomic(path, model_to_json(model).dump(2) + "\n");
}

SeparatedModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace tolalloc
