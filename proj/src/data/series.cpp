#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "glocal/data.hpp"
#include "glocal/errors.hpp"

namespace glocal {

using namespace std::chrono;

std::string_view to_string(AggregateType type) {
  switch (type) {
    case AggregateType::Single: return "Single";
    case AggregateType::STS: return "sTS";
    case AggregateType::MTS: return "mTS";
    case AggregateType::LTS: return "lTS";
  }
  return "Single";
}

AggregateType parse_aggregate_type(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "single") return AggregateType::Single;
  if (lower == "sts") return AggregateType::STS;
  if (lower == "mts") return AggregateType::MTS;
  if (lower == "lts") return AggregateType::LTS;
  throw ValueError("unknown aggregate type '" + std::string(text) + "'");
}

std::string format_timestamp(Timestamp t) {
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

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > text.size()) return false;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + width, out);
  return ec == std::errc{} && ptr == first + width;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) text.remove_suffix(1);

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const bool ok = text.size() >= 16 && read_int(text, 0, 4, y) && text[4] == '-' &&
                  read_int(text, 5, 2, mo) && text[7] == '-' && read_int(text, 8, 2, d) &&
                  (text[10] == 'T' || text[10] == ' ') && read_int(text, 11, 2, h) &&
                  text[13] == ':' && read_int(text, 14, 2, mi) &&
                  (text.size() == 16 || (text.size() == 19 && text[16] == ':' &&
                                         read_int(text, 17, 2, s)));
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h > 23 || mi > 59 || s > 59)
    throw ValueError("malformed timestamp '" + std::string(text) + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

CalendarVector encode_calendar(Timestamp t) {
  const auto since_epoch = t.time_since_epoch().count();
  if (since_epoch % kStep.count() != 0)
    throw GridError("timestamp " + format_timestamp(t) + " is not on the half-hour grid");
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const weekday wd{day};
  const auto slot = static_cast<std::size_t>((t - day) / kStep);

  CalendarVector v{};
  v[kMonthOffset + static_cast<unsigned>(ymd.month()) - 1] = 1.0;
  v[kWeekdayOffset + wd.iso_encoding() - 1] = 1.0;
  v[kSlotOffset + slot] = 1.0;
  return v;
}

std::optional<std::size_t> SeriesSet::find(std::string_view id) const {
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series[i].id == id) return i;
  return std::nullopt;
}

void SeriesSet::validate() const {
  if (series.empty()) throw EmptyInputError("series set is empty");
  std::unordered_set<std::string> ids;
  const Series& first = series.front();
  for (const Series& s : series) {
    if (!ids.insert(s.id).second) throw DuplicateError("duplicate series id '" + s.id + "'");
    if (s.start != first.start || s.size() != first.size())
      throw ShapeError("series '" + s.id + "' is not aligned with '" + first.id + "'");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!std::isfinite(s.values[i]))
        throw ValueError("non-finite value in '" + s.id + "' at " + format_timestamp(s.time_at(i)));
  }
}

std::vector<double> training_scales(const SeriesSet& set, const SplitPlan& plan) {
  std::vector<double> scales;
  scales.reserve(set.size());
  for (const Series& s : set.series) {
    const std::size_t n = std::min(plan.validation_begin, s.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += s.values[i];
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
    scales.push_back(mean > 0.0 ? mean : 1.0);
  }
  return scales;
}

SeriesSet rescaled(const SeriesSet& set, std::span<const double> divisors) {
  if (divisors.size() != set.size()) throw ShapeError("one divisor per series required");
  SeriesSet out = set;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (double& v : out.series[i].values) v /= divisors[i];
  return out;
}

}  // namespace glocal
