#pragma once

#include <filesystem>

#include <json.hpp>

#include "tolalloc/surrogate.hpp"

namespace tolalloc {

inline constexpr int kModelFormatVersion = 1;

/// {format_version, dim, rank, degree, intervals, scales, coeffs[l][i][j]}
nlohmann::json model_to_json(const SeparatedModel& model);
SeparatedModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const SeparatedModel& model);
SeparatedModel load_model(const std::filesystem::path& path);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j, const char* what);

nlohmann::json intervals_to_json(const Intervals& intervals);
Intervals intervals_from_json(const nlohmann::json& j);

}  // namespace tolalloc
