#include "thermocast/weather_client.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "thermocast/errors.hpp"

namespace thermocast::data {

namespace fs = std::filesystem;
using nlohmann::json;

HttplibTransport::HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse HttplibTransport::get(const std::string& host, const std::string& path_and_query) {
  httplib::Client client(host);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_follow_location(true);
  auto res = client.Get(path_and_query);
  if (!res) throw NetworkError("GET " + host + path_and_query + ": " + httplib::to_string(res.error()), true);
  return {res->status, res->body};
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string ArchiveRequest::path_and_query() const {
  return "/v1/archive?latitude=" + fixed4(latitude) + "&longitude=" + fixed4(longitude) + "&start_date=" +
         start_date + "&end_date=" + end_date +
         "&hourly=temperature_2m,relative_humidity_2m,dew_point_2m&timezone=GMT";
}

std::string ArchiveRequest::cache_key() const {
  return fixed4(latitude) + "_" + fixed4(longitude) + "_" + start_date + "_" + end_date + ".json";
}

std::vector<features::WeatherRecord> parse_archive_payload(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("", "expected an object");
  if (j.contains("error") && j["error"].is_boolean() && j["error"].get<bool>()) {
    throw ParseError("/reason", j.value("reason", std::string("API reported an error")));
  }
  if (!j.contains("hourly") || !j["hourly"].is_object()) throw ParseError("/hourly", "missing object");
  const json& hourly = j["hourly"];

  auto array_at = [&](const char* key) -> const json& {
    const std::string path = std::string("/hourly/") + key;
    if (!hourly.contains(key)) throw ParseError(path, "missing array");
    const json& a = hourly[key];
    if (!a.is_array()) throw ParseError(path, "expected an array");
    return a;
  };
  const json& time = array_at("time");
  const char* vars[] = {"temperature_2m", "relative_humidity_2m", "dew_point_2m"};
  const json* values[3];
  for (int k = 0; k < 3; ++k) {
    values[k] = &array_at(vars[k]);
    if (values[k]->size() != time.size()) {
      throw ParseError(std::string("/hourly/") + vars[k],
                       "length " + std::to_string(values[k]->size()) + " differs from time length " +
                           std::to_string(time.size()));
    }
  }

  std::vector<features::WeatherRecord> out;
  out.reserve(time.size());
  for (std::size_t i = 0; i < time.size(); ++i) {
    const std::string path = "/hourly/time/" + std::to_string(i);
    if (!time[i].is_string()) throw ParseError(path, "expected a timestamp string");
    features::WeatherRecord w;
    try {
      // The archive returns GMT times without a zone suffix.
      w.timestamp = parse_timestamp(time[i].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(path, e.what());
    }
    std::optional<double>* fields[] = {&w.air_temp_c, &w.rel_humidity, &w.dew_point_c};
    for (int k = 0; k < 3; ++k) {
      const json& v = (*values[k])[i];
      if (v.is_null()) continue;
      if (!v.is_number()) {
        throw ParseError(std::string("/hourly/") + vars[k] + "/" + std::to_string(i), "expected a number or null");
      }
      *fields[k] = v.get<double>();
    }
    out.push_back(w);
  }
  return out;
}

WeatherClient::WeatherClient(std::shared_ptr<HttpTransport> transport, fs::path cache_dir, Sleep sleep)
    : transport_(std::move(transport)), cache_dir_(std::move(cache_dir)), sleep_(std::move(sleep)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::vector<features::WeatherRecord> WeatherClient::fetch(const ArchiveRequest& request) {
  const fs::path cached = cache_dir_.empty() ? fs::path() : cache_dir_ / request.cache_key();
  if (!cached.empty() && fs::exists(cached)) {
    std::ifstream in(cached, std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    return parse_archive_payload(body.str());
  }
  if (!transport_) throw NetworkError("no cached payload for " + request.cache_key() + " and no transport", false);

  std::string body;
  std::string last_error;
  bool ok = false;
  for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
    if (attempt > 0) sleep_(std::chrono::milliseconds{1000 << (attempt - 1)});
    ++network_calls_;
    try {
      const HttpResponse res = transport_->get(kArchiveHost, request.path_and_query());
      if (res.status == 200) {
        body = res.body;
        ok = true;
      } else if (res.status >= 400 && res.status < 500 && res.status != 429) {
        throw NetworkError("archive request failed with HTTP " + std::to_string(res.status) + ": " + res.body,
                           false);
      } else {
        last_error = "HTTP " + std::to_string(res.status);
      }
    } catch (const NetworkError& e) {
      if (!e.retryable()) throw;
      last_error = e.what();
    }
  }
  if (!ok) throw NetworkError("archive request failed after 3 attempts: " + last_error, true);

  auto records = parse_archive_payload(body);
  if (!cached.empty()) {
    std::error_code ec;
    fs::create_directories(cache_dir_, ec);
    // Unique temp name, then an atomic rename, so concurrent writers never
    // expose a partial file.
    std::random_device rd;
    const fs::path tmp = cached.string() + ".tmp" + std::to_string(rd());
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << body;
      if (!out) throw NetworkError("cannot write cache file " + tmp.string(), false);
    }
    fs::rename(tmp, cached, ec);
    if (ec) {
      fs::remove(tmp, ec);
      throw NetworkError("cannot write cache file " + cached.string(), false);
    }
  }
  return records;
}

fs::path cache_dir_from_env(const fs::path& fallback) {
  const char* env = std::getenv("THERMOCAST_CACHE_DIR");
  return env && *env ? fs::path(env) : fallback;
}

}  // namespace thermocast::data
