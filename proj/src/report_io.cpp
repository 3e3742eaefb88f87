#include "graphcarve/report_io.hpp"

#include "graphcarve/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace graphcarve {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  return s;
}

WeightedCloud from_columns(int n, int d, const std::vector<double>& coords, const std::vector<double>& w,
                           double delta_res) {
  const auto count = static_cast<Eigen::Index>(w.size());
  Mat pts = Eigen::Map<const Mat>(coords.data(), d, count);
  Vec weights = Eigen::Map<const Vec>(w.data(), count);
  return WeightedCloud(n, std::move(pts), std::move(weights), delta_res);
}

std::string path_join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

WeightedCloud read_cloud_csv(const std::string& text, int n, double delta_res) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("cloud csv: empty input");
  const auto header = split(strip(line), ',');
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1 || strip(header.back()) != "weight") throw InputError("cloud csv: header must be x1,...,xd,weight");
  for (int i = 0; i < d; ++i) {
    if (strip(header[static_cast<std::size_t>(i)]) != "x" + std::to_string(i + 1)) {
      throw InputError("cloud csv: header must be x1,...,xd,weight");
    }
  }
  std::vector<double> coords;
  std::vector<double> w;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != d + 1) {
      throw InputError("cloud csv line " + std::to_string(lineno) + ": expected " + std::to_string(d + 1) + " fields");
    }
    for (int i = 0; i <= d; ++i) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        const std::string cell = strip(cells[static_cast<std::size_t>(i)]);
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError("cloud csv line " + std::to_string(lineno) + ": bad number");
      }
      (i < d ? coords : w).push_back(v);
    }
  }
  return from_columns(n, d, coords, w, delta_res);
}

std::string write_cloud_csv(const WeightedCloud& c) {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < c.ambient_dim(); ++i) out << "x" << i + 1 << ",";
  out << "weight\n";
  for (std::size_t p = 0; p < c.size(); ++p) {
    for (int i = 0; i < c.ambient_dim(); ++i) out << c.point(p)[i] << ",";
    out << c.weight(p) << "\n";
  }
  return out.str();
}

WeightedCloud read_cloud_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const int d = j.at("d").get<int>();
    const int n = j.at("n").get<int>();
    const double res = j.at("delta_res").get<double>();
    std::vector<double> coords;
    std::vector<double> w;
    for (const auto& p : j.at("points")) {
      const auto x = p.at("x").get<std::vector<double>>();
      if (static_cast<int>(x.size()) != d) throw InputError("cloud json: point of the wrong dimension");
      coords.insert(coords.end(), x.begin(), x.end());
      w.push_back(p.at("w").get<double>());
    }
    return from_columns(n, d, coords, w, res);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("cloud json: ") + e.what());
  }
}

std::string write_cloud_json(const WeightedCloud& c) {
  nlohmann::json j;
  j["schema"] = "graphcarve/1";
  j["d"] = c.ambient_dim();
  j["n"] = c.intrinsic_dim();
  j["delta_res"] = c.delta_res();
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t p = 0; p < c.size(); ++p) {
    pts.push_back({{"x", std::vector<double>(c.point(p), c.point(p) + c.ambient_dim())}, {"w", c.weight(p)}});
  }
  j["points"] = pts;
  return j.dump();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

WeightedCloud load_cloud(const std::string& path, int n, double delta_res) {
  const std::string text = read_file(path);
  if (std::filesystem::path(path).extension() == ".json") return read_cloud_json(text);
  return read_cloud_csv(text, n, delta_res);
}

void save_cloud(const std::string& path, const WeightedCloud& c) {
  if (std::filesystem::path(path).extension() == ".json") {
    write_file(path, write_cloud_json(c));
  } else {
    write_file(path, write_cloud_csv(c));
  }
}

std::vector<std::string> emit_plots(const PipelineReport& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    const std::string path = path_join(dir, name);
    write_file(path, text);
    written.push_back(path);
  };
  std::ostringstream out;
  out.precision(17);

  out << "phase,count,vertices\n";
  for (std::size_t k = 0; k < r.histogram_before.size(); ++k) out << "before," << k << "," << r.histogram_before[k] << "\n";
  for (std::size_t k = 0; k < r.histogram_after.size(); ++k) out << "after," << k << "," << r.histogram_after[k] << "\n";
  emit("visitation_histogram.csv", out.str());

  out.str("");
  out << "stage,mass,points\n";
  for (const auto& s : r.ledger) out << s.stage << "," << s.mass << "," << s.points << "\n";
  emit("mass_ledger.csv", out.str());

  out.str("");
  out << "direction,k,x_k,z_k,j_k,r_k,c,mass_s,mass_d,mass_f,size_b\n";
  for (const auto& dr : r.schedule.directions) {
    for (const auto& it : dr.ledger) {
      out << dr.index << "," << it.k << "," << it.x_k << "," << it.z_k << "," << it.j_k << ","
          << it.r_k << "," << it.c << "," << it.mass_s << "," << it.mass_d << "," << it.mass_f << "," << it.size_b
          << "\n";
    }
  }
  emit("refinement_ledger.csv", out.str());

  out.str("");
  out << "distance,l2_sq\n";
  for (std::size_t i = 0; i < r.energy.per_sample.size() && i < r.energy.distances.size(); ++i) {
    out << r.energy.distances[i] << "," << r.energy.per_sample[i] << "\n";
  }
  emit("energy_scatter.csv", out.str());

  if (!r.cloud || r.cloud->ambient_dim() != 2) return written;
  const WeightedCloud& c = *r.cloud;
  const double size = 600.0;
  auto sx = [&](double x) { return (x + 1.05) / 2.1 * size; };
  auto sy = [&](double y) { return size - (y + 1.05) / 2.1 * size; };
  out.str("");
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const auto kept = subset_mask(c, r.e3);
  for (std::size_t p = 0; p < c.size(); ++p) {
    out << "<circle cx=\"" << sx(c.point(p)[0]) << "\" cy=\"" << sy(c.point(p)[1]) << "\" r=\"1.2\" fill=\""
        << (kept[p] ? "black" : "#d04040") << "\"/>\n";
  }
  // Split the sites at gaps wider than a few working resolutions; one polyline per slab.
  std::vector<std::pair<double, double>> pts;
  for (std::size_t a = 0; a < r.graph.size(); ++a) {
    pts.emplace_back(r.graph.sites(0, static_cast<Eigen::Index>(a)), r.graph.values(0, static_cast<Eigen::Index>(a)));
  }
  std::sort(pts.begin(), pts.end());
  const double gap = 8.0 * r.working_resolution;
  std::size_t start = 0;
  for (std::size_t a = 1; a <= pts.size(); ++a) {
    if (a == pts.size() || pts[a].first - pts[a - 1].first > gap) {
      out << "<polyline fill=\"none\" stroke=\"#2060c0\" stroke-width=\"1.5\" points=\"";
      for (std::size_t b = start; b < a; ++b) out << (b > start ? " " : "") << sx(pts[b].first) << "," << sy(pts[b].second);
      out << "\"/>\n";
      start = a;
    }
  }
  out << "</svg>\n";
  emit("cloud_graph.svg", out.str());
  return written;
}

}  // namespace graphcarve
