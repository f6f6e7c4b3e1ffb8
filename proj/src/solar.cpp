#include "thermocast/solar.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>

namespace thermocast::features {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

SolarPosition solar_position(TimePoint t, double latitude_deg, double longitude_deg) {
  using namespace std::chrono;
  const double seconds_of_day =
      static_cast<double>(duration_cast<seconds>(t - floor<days>(t)).count());
  const double hour = seconds_of_day / 3600.0;
  // Fractional year in radians.
  const double gamma = 2.0 * std::numbers::pi / days_in_year(t) * (day_of_year(t) - 1 + (hour - 12.0) / 24.0);

  const double eqtime = 229.18 * (0.000075 + 0.001868 * std::cos(gamma) - 0.032077 * std::sin(gamma) -
                                  0.014615 * std::cos(2 * gamma) - 0.040849 * std::sin(2 * gamma));
  const double decl = 0.006918 - 0.399912 * std::cos(gamma) + 0.070257 * std::sin(gamma) -
                      0.006758 * std::cos(2 * gamma) + 0.000907 * std::sin(2 * gamma) -
                      0.002697 * std::cos(3 * gamma) + 0.00148 * std::sin(3 * gamma);

  // True solar time in minutes; timestamps are UTC so there is no zone term.
  const double true_solar = seconds_of_day / 60.0 + eqtime + 4.0 * longitude_deg;
  const double hour_angle = (true_solar / 4.0 - 180.0) * kDeg;
  const double lat = latitude_deg * kDeg;

  double cos_zenith = std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
  cos_zenith = std::clamp(cos_zenith, -1.0, 1.0);
  const double altitude = 90.0 - std::acos(cos_zenith) / kDeg;

  double azimuth = std::atan2(std::sin(hour_angle),
                              std::cos(hour_angle) * std::sin(lat) - std::tan(decl) * std::cos(lat)) /
                       kDeg +
                   180.0;
  azimuth = std::fmod(azimuth, 360.0);
  if (azimuth < 0.0) azimuth += 360.0;

  return {azimuth, altitude, decl / kDeg, eqtime};
}

}  // namespace thermocast::features
