#include "thermocast/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "thermocast/errors.hpp"

namespace thermocast::data {

namespace fs = std::filesystem;
using features::BuildingContext;
using features::SensorRecord;
using features::WeatherRecord;

const DomainData& DatasetBundle::target(const std::string& name) const {
  for (const auto& t : targets)
    if (t.name == name) return t;
  std::string known;
  for (const auto& t : targets) known += (known.empty() ? "" : ", ") + t.name;
  throw ConfigError("unknown target domain '" + name + "' (available: " + known + ")");
}

void DatasetBundle::validate() const {
  auto check = [](const DomainData& d) {
    std::set<std::string> ids;
    for (const auto& c : d.contexts) ids.insert(c.building_id);
    for (const auto& s : d.sensors) {
      if (!ids.count(s.building_id)) {
        throw IngestionError(d.name + ": building '" + s.building_id + "' has no context row");
      }
    }
  };
  check(source);
  for (const auto& t : targets) check(t);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    out.push_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view cell, std::string_view column) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw std::invalid_argument("bad " + std::string(column) + " value '" + std::string(cell) + "'");
  }
  return v;
}

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::string>> lines;  // (line number, text)
};

CsvFile load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  CsvFile f;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      for (auto cell : split(line)) f.header.emplace_back(cell);
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    f.lines.emplace_back(number, line);
  }
  if (number == 0) throw IngestionError(path.string() + ": empty file");
  return f;
}

std::map<std::string, std::size_t> column_index(const CsvFile& f) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < f.header.size(); ++i) idx[f.header[i]] = i;
  return idx;
}

std::size_t require_column(const std::map<std::string, std::size_t>& idx, const std::string& name,
                           const fs::path& path) {
  const auto it = idx.find(name);
  if (it == idx.end()) throw IngestionError(path.string() + ": missing column '" + name + "'");
  return it->second;
}

void finish(const fs::path& path, ReadReport& rep, ReadReport* out) {
  for (const auto& w : rep.warnings) std::clog << path.string() << ": " << w << '\n';
  if (rep.rows > 0 && rep.errors.size() * 20 > rep.rows) {
    std::ostringstream os;
    os << path.string() << ": " << rep.errors.size() << " of " << rep.rows << " rows rejected";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, rep.errors.size()); ++i) {
      os << "; line " << rep.errors[i].line << ": " << rep.errors[i].message;
    }
    throw IngestionError(os.str());
  }
  if (!rep.errors.empty()) {
    std::clog << path.string() << ": skipped " << rep.errors.size() << " bad rows (first at line "
              << rep.errors.front().line << ": " << rep.errors.front().message << ")\n";
  }
  if (out) *out = std::move(rep);
}

}  // namespace

std::vector<SensorRecord> read_sensor_csv(const fs::path& path, ReadReport* report) {
  const CsvFile f = load(path);
  const auto idx = column_index(f);
  const std::size_t c_ts = require_column(idx, "timestamp", path);
  const std::size_t c_id = require_column(idx, "building_id", path);
  const std::size_t c_temp = require_column(idx, "indoor_temp_c", path);
  const std::size_t width = std::max({c_ts, c_id, c_temp}) + 1;

  ReadReport rep;
  std::vector<SensorRecord> out;
  for (const auto& [number, text] : f.lines) {
    ++rep.rows;
    const auto cells = split(text);
    try {
      if (cells.size() < width) throw std::invalid_argument("expected " + std::to_string(f.header.size()) + " fields");
      SensorRecord r;
      r.timestamp = parse_timestamp(cells[c_ts]);
      r.building_id = std::string(cells[c_id]);
      if (r.building_id.empty()) throw std::invalid_argument("empty building_id");
      r.indoor_temp_c = parse_number(cells[c_temp], "indoor_temp_c");
      if (r.indoor_temp_c < features::kMinIndoorTemp || r.indoor_temp_c > features::kMaxIndoorTemp) {
        throw std::invalid_argument("indoor_temp_c " + std::string(cells[c_temp]) + " outside [-10, 60]");
      }
      out.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      rep.errors.push_back({number, e.what()});
    }
  }

  const auto by_key = [](const SensorRecord& a, const SensorRecord& b) {
    return a.building_id != b.building_id ? a.building_id < b.building_id : a.timestamp < b.timestamp;
  };
  if (!std::is_sorted(out.begin(), out.end(), by_key)) {
    rep.warnings.push_back("rows out of order; sorted by building and timestamp");
    std::stable_sort(out.begin(), out.end(), by_key);
  }
  const auto dup = std::unique(out.begin(), out.end(), [](const SensorRecord& a, const SensorRecord& b) {
    return a.building_id == b.building_id && a.timestamp == b.timestamp;
  });
  if (dup != out.end()) {
    rep.warnings.push_back(std::to_string(out.end() - dup) + " duplicate readings dropped");
    out.erase(dup, out.end());
  }
  finish(path, rep, report);
  return out;
}

std::vector<WeatherRecord> read_weather_csv(const fs::path& path, ReadReport* report) {
  const CsvFile f = load(path);
  const auto idx = column_index(f);
  const std::size_t c_ts = require_column(idx, "timestamp", path);
  static const char* const names[] = {"air_temp_c", "rel_humidity", "dew_point_c", "surface_pressure_hpa",
                                      "total_precip_mm"};
  std::optional<std::size_t> cols[5];
  std::size_t width = c_ts + 1;
  for (int k = 0; k < 5; ++k) {
    if (const auto it = idx.find(names[k]); it != idx.end()) {
      cols[k] = it->second;
      width = std::max(width, it->second + 1);
    }
  }
  for (const auto& h : f.header) {
    if (h != "timestamp" && std::find(std::begin(names), std::end(names), h) == std::end(names)) {
      throw IngestionError(path.string() + ": unknown column '" + h + "'");
    }
  }

  ReadReport rep;
  std::vector<WeatherRecord> out;
  for (const auto& [number, text] : f.lines) {
    ++rep.rows;
    const auto cells = split(text);
    try {
      if (cells.size() < width) throw std::invalid_argument("expected " + std::to_string(f.header.size()) + " fields");
      WeatherRecord w;
      w.timestamp = parse_timestamp(cells[c_ts]);
      if (floor_hour(w.timestamp) != w.timestamp) throw std::invalid_argument("timestamp not on the hour");
      std::optional<double>* fields[] = {&w.air_temp_c, &w.rel_humidity, &w.dew_point_c, &w.surface_pressure_hpa,
                                         &w.total_precip_mm};
      for (int k = 0; k < 5; ++k) {
        if (!cols[k] || cells[*cols[k]].empty()) continue;
        *fields[k] = parse_number(cells[*cols[k]], names[k]);
      }
      if (w.air_temp_c && (*w.air_temp_c < -90.0 || *w.air_temp_c > 60.0)) {
        throw std::invalid_argument("air_temp_c outside [-90, 60]");
      }
      if (w.dew_point_c && (*w.dew_point_c < -90.0 || *w.dew_point_c > 60.0)) {
        throw std::invalid_argument("dew_point_c outside [-90, 60]");
      }
      if (w.rel_humidity && (*w.rel_humidity < 0.0 || *w.rel_humidity > 100.0)) {
        throw std::invalid_argument("rel_humidity " + format_double(*w.rel_humidity) + " outside [0, 100]");
      }
      if (w.surface_pressure_hpa && (*w.surface_pressure_hpa < 300.0 || *w.surface_pressure_hpa > 1100.0)) {
        throw std::invalid_argument("surface_pressure_hpa outside [300, 1100]");
      }
      if (w.total_precip_mm && *w.total_precip_mm < 0.0) throw std::invalid_argument("negative total_precip_mm");
      out.push_back(w);
    } catch (const std::invalid_argument& e) {
      rep.errors.push_back({number, e.what()});
    }
  }

  const auto by_time = [](const WeatherRecord& a, const WeatherRecord& b) { return a.timestamp < b.timestamp; };
  if (!std::is_sorted(out.begin(), out.end(), by_time)) {
    rep.warnings.push_back("rows out of order; sorted by timestamp");
    std::stable_sort(out.begin(), out.end(), by_time);
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].timestamp == out[i - 1].timestamp) {
      throw IngestionError(path.string() + ": duplicate timestamp " + format_timestamp(out[i].timestamp));
    }
  }
  finish(path, rep, report);
  return out;
}

std::vector<BuildingContext> read_context_csv(const fs::path& path) {
  const CsvFile f = load(path);
  const auto idx = column_index(f);
  const std::size_t c_id = require_column(idx, "building_id", path);
  const std::size_t c_lat = require_column(idx, "lat", path);
  const std::size_t c_lon = require_column(idx, "lon", path);
  const std::size_t c_area = require_column(idx, "area_m2", path);
  const std::size_t c_occ = require_column(idx, "occupancy", path);
  const std::size_t c_roof = require_column(idx, "roof_color", path);
  const std::size_t c_ceil = require_column(idx, "ceiling_board", path);
  const std::size_t width = std::max({c_id, c_lat, c_lon, c_area, c_occ, c_roof, c_ceil}) + 1;

  std::vector<BuildingContext> out;
  std::set<std::string> seen;
  for (const auto& [number, text] : f.lines) {
    const auto cells = split(text);
    const std::string where = path.string() + " line " + std::to_string(number) + ": ";
    try {
      if (cells.size() < width) throw std::invalid_argument("expected " + std::to_string(f.header.size()) + " fields");
      BuildingContext c;
      c.building_id = std::string(cells[c_id]);
      c.latitude = parse_number(cells[c_lat], "lat");
      c.longitude = parse_number(cells[c_lon], "lon");
      c.area_m2 = parse_number(cells[c_area], "area_m2");
      c.occupancy = parse_number(cells[c_occ], "occupancy");
      c.roof_color = features::parse_roof_color(cells[c_roof]);
      const std::string_view ceil = cells[c_ceil];
      if (ceil == "1" || ceil == "true") {
        c.ceiling_board = true;
      } else if (ceil == "0" || ceil == "false") {
        c.ceiling_board = false;
      } else {
        throw std::invalid_argument("ceiling_board must be 0/1 or true/false, got '" + std::string(ceil) + "'");
      }
      c.validate();
      if (!seen.insert(c.building_id).second) throw std::invalid_argument("duplicate building_id " + c.building_id);
      out.push_back(std::move(c));
    } catch (const std::invalid_argument& e) {
      throw IngestionError(where + e.what());
    } catch (const IngestionError& e) {
      throw IngestionError(where + e.what());
    }
  }
  return out;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  return out;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void write_sensor_csv(const fs::path& path, const std::vector<SensorRecord>& records) {
  auto out = open_out(path);
  out << "timestamp,building_id,indoor_temp_c\n";
  for (const auto& r : records) {
    out << format_timestamp(r.timestamp) << ',' << r.building_id << ',' << format_double(r.indoor_temp_c) << '\n';
  }
  if (!out) throw IngestionError("write failed: " + path.string());
}

void write_weather_csv(const fs::path& path, const std::vector<WeatherRecord>& records) {
  auto out = open_out(path);
  out << "timestamp,air_temp_c,rel_humidity,dew_point_c,surface_pressure_hpa,total_precip_mm\n";
  for (const auto& w : records) {
    out << format_timestamp(w.timestamp) << ',' << opt(w.air_temp_c) << ',' << opt(w.rel_humidity) << ','
        << opt(w.dew_point_c) << ',' << opt(w.surface_pressure_hpa) << ',' << opt(w.total_precip_mm) << '\n';
  }
  if (!out) throw IngestionError("write failed: " + path.string());
}

void write_context_csv(const fs::path& path, const std::vector<BuildingContext>& contexts) {
  auto out = open_out(path);
  out << "building_id,lat,lon,area_m2,occupancy,roof_color,ceiling_board\n";
  for (const auto& c : contexts) {
    out << c.building_id << ',' << format_double(c.latitude) << ',' << format_double(c.longitude) << ','
        << format_double(c.area_m2) << ',' << format_double(c.occupancy) << ',' << features::to_string(c.roof_color)
        << ',' << (c.ceiling_board ? 1 : 0) << '\n';
  }
  if (!out) throw IngestionError("write failed: " + path.string());
}

std::vector<WeatherRecord> merge_weather(const std::vector<WeatherRecord>& api, const std::vector<WeatherRecord>& csv,
                                         std::size_t* conflicts) {
  std::map<TimePoint, WeatherRecord> merged;
  for (const auto& w : api) merged[w.timestamp] = w;
  std::size_t n_conflicts = 0;
  for (const auto& w : csv) {
    auto [it, inserted] = merged.emplace(w.timestamp, w);
    if (inserted) continue;
    WeatherRecord& m = it->second;
    std::optional<double>* dst[] = {&m.air_temp_c, &m.rel_humidity, &m.dew_point_c, &m.surface_pressure_hpa,
                                    &m.total_precip_mm};
    const std::optional<double>* src[] = {&w.air_temp_c, &w.rel_humidity, &w.dew_point_c, &w.surface_pressure_hpa,
                                          &w.total_precip_mm};
    for (int k = 0; k < 5; ++k) {
      if (!*src[k]) continue;
      if (*dst[k] && **dst[k] != **src[k]) ++n_conflicts;
      *dst[k] = *src[k];
    }
  }
  if (conflicts) *conflicts = n_conflicts;
  std::vector<WeatherRecord> out;
  out.reserve(merged.size());
  for (auto& [_, w] : merged) out.push_back(std::move(w));
  return out;
}

DomainData read_domain_dir(const fs::path& dir, const std::string& name) {
  DomainData d;
  d.name = name;
  d.sensors = read_sensor_csv(dir / "sensors.csv");
  d.weather = read_weather_csv(dir / "weather.csv");
  d.contexts = read_context_csv(dir / "contexts.csv");
  return d;
}

void write_domain_dir(const fs::path& dir, const DomainData& domain) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestionError("cannot create " + dir.string() + ": " + ec.message());
  write_sensor_csv(dir / "sensors.csv", domain.sensors);
  write_weather_csv(dir / "weather.csv", domain.weather);
  write_context_csv(dir / "contexts.csv", domain.contexts);
}

void write_bundle(const fs::path& dir, const DatasetBundle& bundle) {
  write_domain_dir(dir / bundle.source.name, bundle.source);
  nlohmann::json names = nlohmann::json::array();
  for (const auto& t : bundle.targets) {
    write_domain_dir(dir / t.name, t);
    names.push_back(t.name);
  }
  const nlohmann::json manifest{{"source", bundle.source.name}, {"targets", names}, {"provenance", bundle.provenance}};
  auto out = open_out(dir / "bundle.json");
  out << manifest.dump(2) << '\n';
}

DatasetBundle read_bundle(const fs::path& dir) {
  std::ifstream in(dir / "bundle.json");
  if (!in) throw IngestionError("cannot open " + (dir / "bundle.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError((dir / "bundle.json").string() + ": " + e.what());
  }
  DatasetBundle b;
  try {
    const std::string source = manifest.at("source").get<std::string>();
    b.source = read_domain_dir(dir / source, source);
    for (const auto& t : manifest.at("targets")) {
      const std::string name = t.get<std::string>();
      b.targets.push_back(read_domain_dir(dir / name, name));
    }
    b.provenance = manifest.value("provenance", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError((dir / "bundle.json").string() + ": " + e.what());
  }
  b.validate();
  return b;
}

}  // namespace thermocast::data
