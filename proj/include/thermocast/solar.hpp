#pragma once

#include "thermocast/util.hpp"

namespace thermocast::features {

struct SolarPosition {
  double azimuth_deg;   // clockwise from true north, [0, 360)
  double altitude_deg;  // above the horizon, no refraction correction
  double declination_deg;
  double equation_of_time_min;
};

// NOAA general solar position (fractional-year series for the equation of
// time and declination). Good to about a degree for latitudes within the
// tropics and mid-latitudes.
SolarPosition solar_position(TimePoint t, double latitude_deg, double longitude_deg);

}  // namespace thermocast::features
