#include "thermocast/util.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace thermocast {
namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) {
    throw std::invalid_argument("timestamp too short: '" + std::string(text) + "'");
  }
  int value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') {
      throw std::invalid_argument("bad digit in timestamp '" + std::string(text) + "'");
    }
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw std::invalid_argument("malformed timestamp '" + std::string(text) + "'");
  }
}

std::chrono::sys_days make_day(std::string_view text, int y, int m, int d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw std::invalid_argument("invalid calendar date in '" + std::string(text) + "'");
  }
  return std::chrono::sys_days{ymd};
}

}  // namespace

TimePoint parse_date(std::string_view text) {
  const int y = read_int(text, 0, 4);
  expect_char(text, 4, '-');
  const int m = read_int(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = read_int(text, 8, 2);
  if (text.size() != 10) {
    throw std::invalid_argument("malformed date '" + std::string(text) + "'");
  }
  return TimePoint{make_day(text, y, m, d)};
}

TimePoint parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const int y = read_int(text, 0, 4);
  expect_char(text, 4, '-');
  const int mo = read_int(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = read_int(text, 8, 2);
  if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ' && text[10] != 't')) {
    throw std::invalid_argument("malformed timestamp '" + std::string(text) + "'");
  }
  const int h = read_int(text, 11, 2);
  expect_char(text, 13, ':');
  const int mi = read_int(text, 14, 2);
  std::size_t pos = 16;
  int s = 0;
  if (pos < text.size() && text[pos] == ':') {
    s = read_int(text, pos + 1, 2);
    pos += 3;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    }
  }
  if (h > 23 || mi > 59 || s > 60) {
    throw std::invalid_argument("time of day out of range in '" + std::string(text) + "'");
  }
  int offset_minutes = 0;
  if (pos < text.size()) {
    const char z = text[pos];
    if (z == 'Z' || z == 'z') {
      ++pos;
    } else if (z == '+' || z == '-') {
      const int oh = read_int(text, pos + 1, 2);
      expect_char(text, pos + 3, ':');
      const int om = read_int(text, pos + 4, 2);
      offset_minutes = (oh * 60 + om) * (z == '+' ? 1 : -1);
      pos += 6;
    }
  }
  if (pos != text.size()) {
    throw std::invalid_argument("trailing characters in timestamp '" + std::string(text) + "'");
  }
  const auto local = TimePoint{make_day(text, y, mo, d)} + hours{h} + minutes{mi} + seconds{s};
  return local - minutes{offset_minutes};
}

std::string format_timestamp(TimePoint t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_date(TimePoint t) {
  return format_timestamp(t).substr(0, 10);
}

TimePoint floor_hour(TimePoint t) {
  return std::chrono::floor<std::chrono::hours>(t);
}

int hour_of_day(TimePoint t) {
  using namespace std::chrono;
  return static_cast<int>(duration_cast<hours>(t - floor<days>(t)).count());
}

int day_of_year(TimePoint t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<int>((day - jan1).count()) + 1;
}

int days_in_year(TimePoint t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  return ymd.year().is_leap() ? 366 : 365;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view component) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : component) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (h | 1ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace thermocast
