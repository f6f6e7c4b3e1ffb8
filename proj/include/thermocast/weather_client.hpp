#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "thermocast/features.hpp"

namespace thermocast::data {

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Blocking GET. Implementations throw NetworkError on transport failure.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& host, const std::string& path_and_query) = 0;
};

// cpp-httplib over HTTPS.
class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds{30});
  HttpResponse get(const std::string& host, const std::string& path_and_query) override;

 private:
  std::chrono::seconds timeout_;
};

struct ArchiveRequest {
  double latitude = 0.0;
  double longitude = 0.0;
  std::string start_date;  // YYYY-MM-DD, inclusive
  std::string end_date;    // YYYY-MM-DD, inclusive

  // "/v1/archive?latitude=...&hourly=temperature_2m,relative_humidity_2m,dew_point_2m&timezone=GMT"
  std::string path_and_query() const;
  // "{lat}_{lon}_{start}_{end}.json" with coordinates at 4 decimals.
  std::string cache_key() const;
};

inline constexpr const char* kArchiveHost = "https://archive-api.open-meteo.com";

// Parses an archive payload into records carrying air temperature, relative
// humidity and dew point. Throws ParseError with the JSON path of the first
// problem.
std::vector<features::WeatherRecord> parse_archive_payload(const std::string& body);

class WeatherClient {
 public:
  using Sleep = std::function<void(std::chrono::milliseconds)>;

  // Empty cache_dir disables caching. `sleep` defaults to a real sleep.
  WeatherClient(std::shared_ptr<HttpTransport> transport, std::filesystem::path cache_dir, Sleep sleep = {});

  // Cache hit: no network I/O. Miss: up to 3 attempts with exponential
  // backoff (1 s, 2 s), then NetworkError (retryable). The raw body is cached
  // only after it parses.
  std::vector<features::WeatherRecord> fetch(const ArchiveRequest& request);

  std::size_t network_calls() const { return network_calls_; }

 private:
  std::shared_ptr<HttpTransport> transport_;
  std::filesystem::path cache_dir_;
  Sleep sleep_;
  std::size_t network_calls_ = 0;
};

// Cache directory from THERMOCAST_CACHE_DIR, else `fallback`.
std::filesystem::path cache_dir_from_env(const std::filesystem::path& fallback);

}  // namespace thermocast::data
