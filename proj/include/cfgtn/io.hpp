#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfgtn/model.hpp"
#include "cfgtn/sampling.hpp"

namespace cfgtn {

struct CsvTable {
  std::vector<std::string> header;
  SampleMatrix values;
};

/// Comma-separated numbers with a mandatory header row. Throws InputError on
/// a missing header, ragged or empty rows, or a field that is not a number.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// Header u1..up, then one row per sample, shortest round-trip formatting.
void write_sample_csv(std::ostream& out, const SampleMatrix& values, const std::string& prefix = "u");

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Model document with fields weights, clayton_alpha, frank_alpha,
/// gumbel_alpha, t_dof, t_angles, normal_angles, dimension, loglik, df, aicc.
/// Correlations are written as both angles and matrix entries; angles are
/// authoritative on reading.
std::string model_to_json(const CfgtnModel& model, const std::optional<FitReport>& fit = std::nullopt);
CfgtnModel model_from_json(const std::string& text);

std::string scenario_to_json(const ScenarioSpec& spec, std::uint64_t seed);
ScenarioSpec scenario_from_json(const std::string& text);

}  // namespace cfgtn
