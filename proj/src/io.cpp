#include "mflda/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mflda {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_density_csv(const std::filesystem::path& path, const Density& rho) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "x,value\n";
  for (std::size_t j = 0; j < rho.size(); ++j) out << rho.grid().node(j) << ',' << rho[j] << '\n';
}

Density read_density_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,value") throw ParseError(path.string() + ": expected header x,value");
  std::vector<double> xs, vs;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    double x = 0.0, v = 0.0;
    char comma = 0;
    if (!(row >> x >> comma >> v) || comma != ',') {
      throw ParseError(path.string() + ": bad row '" + line + "'");
    }
    xs.push_back(x);
    vs.push_back(v);
  }
  if (xs.size() < PeriodicGrid::kMinPoints) throw ParseError(path.string() + ": too few rows");
  const PeriodicGrid grid(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (std::abs(xs[j] - grid.node(j)) > 1e-9) {
      throw ParseError(path.string() + ": nodes are not 0, h, 2h, ...");
    }
  }
  return Density(grid, std::move(vs));
}

nlohmann::json density_array(const Density& rho) {
  return nlohmann::json(std::vector<double>(rho.values().begin(), rho.values().end()));
}

Density density_from_array(const nlohmann::json& values) {
  auto v = values.get<std::vector<double>>();
  const PeriodicGrid grid(v.size());
  return Density(grid, std::move(v));
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  return out;
}

std::vector<double> parse_row(const std::string& line, std::size_t fields,
                              const std::filesystem::path& path) {
  std::vector<double> v;
  std::istringstream row(line);
  std::string cell;
  while (std::getline(row, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    std::size_t used = 0;
    try {
      v.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) {
      throw ParseError(path.string() + ": bad number '" + cell + "'");
    }
  }
  if (v.size() != fields) throw ParseError(path.string() + ": expected " + std::to_string(fields) + " fields in '" + line + "'");
  return v;
}

std::ifstream open_in(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw ParseError(path.string() + ": expected header " + header);
  return in;
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec) {
  std::ofstream out = open_out(path);
  out << "t,x,mu,nu\n";
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    const Density& mu = rec.mu[i];
    const Density& nu = rec.nu[i];
    for (std::size_t j = 0; j < mu.size(); ++j) {
      out << rec.times[i] << ',' << mu.grid().node(j) << ',' << mu[j] << ',' << nu[j] << '\n';
    }
  }
}

TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, "t,x,mu,nu");
  std::vector<double> ts;
  std::vector<std::vector<double>> mus, nus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto v = parse_row(line, 4, path);
    if (ts.empty() || v[0] != ts.back()) {
      if (!ts.empty() && !(v[0] > ts.back())) throw ParseError(path.string() + ": times not increasing");
      ts.push_back(v[0]);
      mus.emplace_back();
      nus.emplace_back();
    }
    mus.back().push_back(v[2]);
    nus.back().push_back(v[3]);
  }
  if (ts.empty()) throw ParseError(path.string() + ": no snapshots");
  TrajectoryRecord rec;
  const std::size_t n = mus[0].size();
  const PeriodicGrid grid(n);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (mus[i].size() != n) throw ParseError(path.string() + ": ragged snapshots");
    rec.times.push_back(ts[i]);
    rec.mu.emplace_back(grid, std::move(mus[i]));
    rec.nu.emplace_back(grid, std::move(nus[i]));
  }
  return rec;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricSample>& rows) {
  std::ofstream out = open_out(path);
  out << kMetricsHeader << '\n';
  for (const auto& s : rows) {
    out << s.t << ',' << s.w2_mu << ',' << s.w2_nu << ',' << s.kl_mu << ',' << s.kl_nu << ','
        << s.ni << ',' << s.f_value << ',' << s.mass_mu << ',' << s.mass_nu << ',' << s.min_mu
        << ',' << s.min_nu << '\n';
  }
}

std::vector<MetricSample> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, kMetricsHeader);
  std::vector<MetricSample> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto v = parse_row(line, 11, path);
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]});
  }
  return rows;
}

}  // namespace mflda
