#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace paddy {

/// Calendar date (day resolution), stored as days since the Unix epoch.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days d) : days_(d) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses strict `YYYY-MM-DD`; throws std::invalid_argument otherwise.
  static Date parse(std::string_view text);

  std::string str() const;
  constexpr std::chrono::sys_days sys_days() const { return days_; }
  constexpr long serial() const { return days_.time_since_epoch().count(); }

  constexpr Date plus_days(long n) const { return Date(days_ + std::chrono::days{n}); }
  friend constexpr long operator-(Date a, Date b) { return a.serial() - b.serial(); }
  friend constexpr auto operator<=>(Date, Date) = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace paddy
