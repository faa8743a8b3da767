#pragma once

#include <filesystem>
#include <string>

#include "gslda/cascade.hpp"

namespace gslda {

inline constexpr int kModelFormatVersion = 1;

// JSON with sorted keys. Reals are stored as hex-float strings so a round
// trip is bit-exact.
std::string model_to_json(const CascadeModel& model);
CascadeModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const CascadeModel& model);
CascadeModel load_model(const std::filesystem::path& path);

std::string format_real(double v);
double parse_real(const std::string& s);

}  // namespace gslda
