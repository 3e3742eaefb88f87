#pragma once

#include "graphcarve/cloud.hpp"
#include "graphcarve/pipeline.hpp"

#include <string>
#include <vector>

namespace graphcarve {

/// CSV with header `x1,...,xd,weight`. n and delta_res are not part of the format.
WeightedCloud read_cloud_csv(const std::string& text, int n, double delta_res);
std::string write_cloud_csv(const WeightedCloud& c);

/// JSON {d, n, delta_res, points: [{x: [...], w}]}.
WeightedCloud read_cloud_json(const std::string& text);
std::string write_cloud_json(const WeightedCloud& c);

/// Picks the format from the extension (.json or anything else as CSV).
WeightedCloud load_cloud(const std::string& path, int n, double delta_res);
void save_cloud(const std::string& path, const WeightedCloud& c);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

/// Writes CSV series and, for planar clouds, an SVG sketch into `dir`. Returns the paths written.
/// A default-constructed report (no cloud) produces header-only CSVs.
std::vector<std::string> emit_plots(const PipelineReport& r, const std::string& dir);

}  // namespace graphcarve
