#include "paddy/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace paddy {

Date::Date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  days_ = std::chrono::sys_days{ymd};
}

namespace {

template <typename T>
T parse_digits(std::string_view text, std::size_t width) {
  T value{};
  if (text.size() != width) throw std::invalid_argument("bad date field");
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::invalid_argument("bad date field");
  return value;
}

}  // namespace

Date Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw std::invalid_argument("date must be YYYY-MM-DD: '" + std::string(text) + "'");
  const int y = parse_digits<int>(text.substr(0, 4), 4);
  const unsigned m = parse_digits<unsigned>(text.substr(5, 2), 2);
  const unsigned d = parse_digits<unsigned>(text.substr(8, 2), 2);
  try {
    return Date(y, m, d);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("invalid calendar date: '" + std::string(text) + "'");
  }
}

std::string Date::str() const {
  const std::chrono::year_month_day ymd{days_};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace paddy
