#include "leaklab/io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "leaklab/errors.hpp"

namespace leaklab {

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_videos_csv(const std::string& path, const std::vector<Video>& videos) {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  if (!videos.empty()) {
    for (Eigen::Index i = 0; i < videos.front().rows(); ++i)
      for (Eigen::Index k = 0; k < videos.front().cols(); ++k) header.push_back(fmt::format("x_{}_{}", i, k));
  }
  rows.reserve(videos.size());
  for (const Video& v : videos) {
    const Vector flat = flatten(v);
    rows.emplace_back(flat.data(), flat.data() + flat.size());
  }
  write_csv(path, header, rows);
}

std::vector<Video> read_videos_csv(const std::string& path, int frames, int dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  std::string line;
  std::getline(in, line);  // header
  std::vector<Video> out;
  const Eigen::Index flat = static_cast<Eigen::Index>(frames) * dim;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Vector v(flat);
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= flat) throw ShapeError("data row has more than frames*dim columns");
      try {
        v(k++) = std::stod(cell);
      } catch (const std::exception&) {
        throw ConfigError("data file '" + path + "' has a non-numeric cell");
      }
    }
    if (k != flat) throw ShapeError("data row has fewer than frames*dim columns");
    out.push_back(unflatten(v, frames, dim));
  }
  return out;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string s = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string version_string() { return "leaklab-0.1.0"; }

Json manifest(const std::string& experiment, const ExperimentConfig& config) {
  return Json{{"experiment", experiment},
              {"config_hash", fmt::format("{:016x}", config_hash(config))},
              {"seed", config.seed},
              {"version", version_string()},
              {"config", config_to_json(config)}};
}

void write_manifest(const std::string& output_path, const std::string& experiment, const ExperimentConfig& config) {
  write_json(output_path + ".manifest.json", manifest(experiment, config));
}

}  // namespace leaklab
