#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "glocal/data.hpp"
#include "glocal/errors.hpp"

namespace glocal {
namespace {

using namespace std::chrono;

// Monday 2010-01-04 00:00 UTC.
constexpr sys_days kSyntheticStart = sys_days{year{2010} / January / 4};

constexpr std::size_t kConsumersSmall = 50;
constexpr std::size_t kConsumersMedium = 100;
constexpr std::size_t kConsumersLarge = 200;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Slowly varying level shared by every consumer (weather-like): a daily AR(1)
// deviation, linearly interpolated onto the half-hour grid.
std::vector<double> common_level(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(splitmix64(seed ^ 0xC0FFEEull));
  std::normal_distribution<double> shock(0.0, 0.12);
  const std::size_t n_days = n / kStepsPerDay + 2;
  std::vector<double> daily(n_days);
  double z = 0.0;
  for (double& d : daily) {
    z = 0.85 * z + shock(rng);
    d = z;
  }
  std::vector<double> level(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t d = t / kStepsPerDay;
    const double frac = static_cast<double>(t % kStepsPerDay) / kStepsPerDay;
    level[t] = std::max(0.2, 1.0 + (1.0 - frac) * daily[d] + frac * daily[d + 1]);
  }
  return level;
}

// One consumer: floor plus daily and weekly sinusoids, weekend modulation,
// lognormal scale and i.i.d. multiplicative lognormal noise, clipped at zero.
std::vector<double> draw_consumer(std::mt19937_64& rng, const std::vector<double>& level) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::lognormal_distribution<double> scale_dist(std::log(0.5), 0.4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double scale = scale_dist(rng);
  const double floor_load = 0.25 + 0.2 * unit(rng);
  const double daily_amp = 0.4 + 0.5 * unit(rng);
  const double daily_phase = -0.5 * std::numbers::pi + 0.4 * gauss(rng);
  const double weekly_amp = 0.05 + 0.15 * unit(rng);
  const double weekly_phase = two_pi * unit(rng);
  const double weekend = 0.85 + 0.35 * unit(rng);
  const double sigma = 0.45 + 0.2 * unit(rng);

  std::vector<double> v(level.size());
  for (std::size_t t = 0; t < v.size(); ++t) {
    const double profile =
        floor_load +
        daily_amp * (1.0 + std::sin(two_pi * static_cast<double>(t % kStepsPerDay) / kStepsPerDay + daily_phase)) +
        weekly_amp * (1.0 + std::sin(two_pi * static_cast<double>(t % kStepsPerWeek) / kStepsPerWeek + weekly_phase));
    // Synthetic start is a Monday, so days 5 and 6 of each week are the weekend.
    const bool is_weekend = (t / kStepsPerDay) % 7 >= 5;
    const double noise = std::exp(sigma * gauss(rng) - 0.5 * sigma * sigma);
    v[t] = std::max(0.0, scale * profile * (is_weekend ? weekend : 1.0) * level[t] * noise);
  }
  return v;
}

}  // namespace

SyntheticDetail generate_synthetic_detailed(std::uint64_t seed, std::size_t n_per_type,
                                            std::size_t n_weeks, bool keep_constituents) {
  if (n_per_type < 1) throw ConfigError("n_per_type must be at least 1");
  if (n_weeks < 3) throw ConfigError("n_weeks must be at least 3");

  const std::size_t n = n_weeks * kStepsPerWeek;
  const std::vector<double> level = common_level(seed, n);

  SyntheticDetail out;
  const struct {
    AggregateType type;
    std::size_t consumers;
    const char* prefix;
  } groups[] = {{AggregateType::Single, 1, "single"},
                {AggregateType::STS, kConsumersSmall, "sts"},
                {AggregateType::MTS, kConsumersMedium, "mts"},
                {AggregateType::LTS, kConsumersLarge, "lts"}};

  std::uint64_t stream = 0;
  for (const auto& g : groups) {
    for (std::size_t k = 0; k < n_per_type; ++k) {
      std::mt19937_64 rng(splitmix64(seed * 0x100000001B3ull + ++stream));
      Series s;
      char id[32];
      std::snprintf(id, sizeof id, "%s_%03zu", g.prefix, k);
      s.id = id;
      s.aggregate_type = g.type;
      s.start = kSyntheticStart;
      s.values.assign(n, 0.0);
      std::vector<std::vector<double>> parts;
      for (std::size_t c = 0; c < g.consumers; ++c) {
        std::vector<double> consumer = draw_consumer(rng, level);
        for (std::size_t t = 0; t < n; ++t) s.values[t] += consumer[t];
        if (keep_constituents) parts.push_back(std::move(consumer));
      }
      out.set.series.push_back(std::move(s));
      out.constituents.push_back(std::move(parts));
    }
  }
  return out;
}

SeriesSet generate_synthetic(std::uint64_t seed, std::size_t n_per_type, std::size_t n_weeks) {
  return generate_synthetic_detailed(seed, n_per_type, n_weeks, false).set;
}

}  // namespace glocal
