#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leaklab/config.hpp"
#include "leaklab/video.hpp"

namespace leaklab {

/// 17 significant digits: bit-exact round trip for doubles.
std::string format_double(double x);

/// Writes a header row followed by numeric rows.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Videos as CSV: header x_<frame>_<coord>, one flattened video per row.
void write_videos_csv(const std::string& path, const std::vector<Video>& videos);
std::vector<Video> read_videos_csv(const std::string& path, int frames, int dim);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

/// FNV-1a over the compact dump of the resolved config.
std::uint64_t config_hash(const ExperimentConfig& config);

/// {experiment, config_hash, seed, version, config}, written next to an output as <output>.manifest.json.
Json manifest(const std::string& experiment, const ExperimentConfig& config);
void write_manifest(const std::string& output_path, const std::string& experiment, const ExperimentConfig& config);

std::string version_string();

}  // namespace leaklab
