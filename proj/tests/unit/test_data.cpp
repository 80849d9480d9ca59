#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "glocal/data.hpp"
#include "glocal/errors.hpp"
#include "test_support.hpp"

using namespace glocal;

namespace {

Series ramp(std::size_t n, const std::string& id = "r", std::size_t series_offset = 0) {
  Series s;
  s.id = id;
  s.start = parse_timestamp("2010-01-04T00:00:00Z");
  s.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.values[i] = static_cast<double>(i + series_offset);
  return s;
}

double coefficient_of_variation(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size())) / mean;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("timestamps round-trip through text") {
  const Timestamp t = parse_timestamp("2010-07-11T23:30:00Z");
  CHECK(format_timestamp(t) == "2010-07-11T23:30:00Z");
  CHECK(parse_timestamp("2010-07-11 23:30") == t);
  CHECK_THROWS_AS(parse_timestamp("yesterday"), ValueError);
}

TEST_CASE("calendar encoding follows the month | weekday | slot layout") {
  auto ones = [](const CalendarVector& c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] == 1.0) idx.push_back(i);
      else REQUIRE(c[i] == 0.0);
    return idx;
  };
  CHECK(ones(encode_calendar(parse_timestamp("2010-01-04T00:00:00Z"))) ==
        std::vector<std::size_t>{0, 12, 19});
  CHECK(ones(encode_calendar(parse_timestamp("2010-07-11T23:30:00Z"))) ==
        std::vector<std::size_t>{6, 18, 66});
  CHECK_THROWS_AS(encode_calendar(parse_timestamp("2010-07-11T23:15:00Z")), GridError);

  // Every slot over two weeks has exactly three ones.
  Timestamp t = parse_timestamp("2011-02-27T00:00:00Z");
  for (int i = 0; i < 2 * 336; ++i, t += kStep) {
    const CalendarVector c = encode_calendar(t);
    CHECK(std::accumulate(c.begin(), c.end(), 0.0) == 3.0);
  }
}

TEST_CASE("aggregate type names parse case-insensitively") {
  for (AggregateType t : kAggregateTypes) CHECK(parse_aggregate_type(to_string(t)) == t);
  CHECK(parse_aggregate_type("LTS") == AggregateType::LTS);
  CHECK_THROWS_AS(parse_aggregate_type("huge"), ValueError);
}

TEST_CASE("synthetic data is deterministic and aggregates are exact sums") {
  const SeriesSet a = generate_synthetic(1, 2, 3);
  const SeriesSet b = generate_synthetic(1, 2, 3);
  REQUIRE(a.size() == 8);
  CHECK(a.length() == 3 * kStepsPerWeek);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.series[i].id == b.series[i].id);
    CHECK(a.series[i].values == b.series[i].values);
  }
  CHECK(generate_synthetic(2, 2, 3).series[0].values != a.series[0].values);

  const SyntheticDetail d = generate_synthetic_detailed(1, 1, 3, true);
  const std::map<AggregateType, std::size_t> expected_parts = {
      {AggregateType::Single, 1}, {AggregateType::STS, 50}, {AggregateType::MTS, 100},
      {AggregateType::LTS, 200}};
  for (std::size_t i = 0; i < d.set.size(); ++i) {
    const Series& s = d.set.series[i];
    REQUIRE(d.constituents[i].size() == expected_parts.at(s.aggregate_type));
    for (double v : s.values) REQUIRE(v >= 0.0);
    std::vector<double> sum(s.size(), 0.0);
    for (const auto& part : d.constituents[i])
      for (std::size_t t = 0; t < s.size(); ++t) sum[t] += part[t];
    double max_diff = 0.0;
    for (std::size_t t = 0; t < s.size(); ++t) max_diff = std::max(max_diff, std::abs(sum[t] - s.values[t]));
    CHECK(max_diff == 0.0);
    if (s.aggregate_type == AggregateType::LTS) {
      const double cov = coefficient_of_variation(s.values);
      for (const auto& part : d.constituents[i]) CHECK(cov < coefficient_of_variation(part));
    }
  }
  // Detailed and plain generators agree.
  const SeriesSet plain = generate_synthetic(1, 1, 3);
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(plain.series[i].values == d.set.series[i].values);

  CHECK_THROWS_AS(generate_synthetic(1, 0, 3), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(1, 1, 2), ConfigError);
}

TEST_CASE("CSV round trip is exact") {
  test::TempDir dir("csv");
  const SeriesSet set = generate_synthetic(5, 1, 3);
  write_csv(set, dir.path() / "s.csv");
  const SeriesSet back = load_csv(dir.path() / "s.csv");
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back.series[i].id == set.series[i].id);
    CHECK(back.series[i].aggregate_type == set.series[i].aggregate_type);
    CHECK(back.series[i].start == set.series[i].start);
    CHECK(back.series[i].values == set.series[i].values);
  }
}

TEST_CASE("CSV loader counts rows per id and sorts by time") {
  test::TempDir dir("csv2");
  std::string text = "id,value,timestamp\n";
  Timestamp t0 = parse_timestamp("2010-01-04T00:00:00Z");
  for (int i = 479; i >= 0; --i)
    for (const char* id : {"a", "b"})
      text += std::string(id) + "," + std::to_string(i) + "," + format_timestamp(t0 + kStep * i) + "\n";
  write_text(dir.path() / "x.csv", text);
  const SeriesSet set = load_csv(dir.path() / "x.csv");
  REQUIRE(set.size() == 2);
  CHECK(set.series[0].size() == 480);
  CHECK(set.series[1].size() == 480);
  CHECK(set.series[0].values[10] == 10.0);
  CHECK(set.series[0].aggregate_type == AggregateType::Single);
}

TEST_CASE("CSV loader rejects malformed input") {
  test::TempDir dir("csv3");
  const auto p = dir.path() / "bad.csv";
  const std::string header = "timestamp,id,value\n";

  write_text(p, header + "2010-01-04T00:00:00Z,a,1\n2010-01-04T01:00:00Z,a,2\n");
  try {
    load_csv(p);
    FAIL("expected GapError");
  } catch (const GapError& e) {
    CHECK(e.id() == "a");
    CHECK(e.timestamp() == "2010-01-04T01:00:00Z");
  }

  write_text(p, header + "2010-01-04T00:00:00Z,a,1\n2010-01-04T00:00:00Z,a,2\n");
  CHECK_THROWS_AS(load_csv(p), DuplicateError);
  write_text(p, header + "2010-01-04T00:10:00Z,a,1\n");
  CHECK_THROWS_AS(load_csv(p), GridError);
  write_text(p, header + "2010-01-04T00:00:00Z,a,nan\n");
  CHECK_THROWS_AS(load_csv(p), ValueError);
  write_text(p, header + "2010-01-04T00:00:00Z,a,inf\n");
  CHECK_THROWS_AS(load_csv(p), ValueError);
  write_text(p, header);
  CHECK_THROWS_AS(load_csv(p), EmptyInputError);
  write_text(p, "");
  CHECK_THROWS_AS(load_csv(p), EmptyInputError);
  CHECK_THROWS_AS(load_csv(dir.path() / "missing.csv"), IOError);
}

TEST_CASE("make_windows counts and contents") {
  CHECK(make_windows(ramp(400), 336, 48, 1).rows() == 17);
  CHECK(make_windows(ramp(384), 336, 48, 1).rows() == 1);
  CHECK(make_windows(ramp(400), 336, 48, 12).rows() == 2);
  CHECK_THROWS_AS(make_windows(ramp(383), 336, 48, 1), InsufficientDataError);

  const Series s = ramp(400);
  const WindowedDataset d = make_windows(s, 336, 48, 12, 7);
  for (std::size_t j = 0; j < d.rows(); ++j) {
    CHECK(d.sample_series_index[j] == 7);
    CHECK(d.target_start[j] == j * 12 + 336);
    CHECK(d.x_lags(j, 0) == static_cast<double>(j * 12));
    CHECK(d.x_lags(j, 335) == static_cast<double>(j * 12 + 335));
    CHECK(d.y(j, 0) == static_cast<double>(j * 12 + 336));
    CHECK(d.y(j, 47) == static_cast<double>(j * 12 + 383));
    const CalendarVector cal = encode_calendar(s.time_at(j * 12 + 336));
    for (std::size_t c = 0; c < kCalendarDim; ++c) CHECK(d.x_exog(j, c) == cal[c]);
  }
}

TEST_CASE("stack concatenates rows and checks shapes") {
  const WindowedDataset a = make_windows(ramp(400, "a"), 336, 48, 1, 0);
  const WindowedDataset b = make_windows(ramp(400, "b", 1000), 336, 48, 1, 1);
  const WindowedDataset ab[] = {a, b};
  const WindowedDataset s = stack(ab);
  CHECK(s.rows() == 34);
  CHECK(s.sample_series_index[16] == 0);
  CHECK(s.sample_series_index[17] == 1);
  CHECK(s.y(17, 0) == 1336.0);

  const WindowedDataset one[] = {a};
  const WindowedDataset same = stack(one);
  CHECK(same.x_lags == a.x_lags);
  CHECK(same.y == a.y);
  CHECK(same.sample_series_index == a.sample_series_index);

  CHECK_THROWS_AS(stack(std::span<const WindowedDataset>{}), EmptyInputError);
  const WindowedDataset c = make_windows(ramp(400), 300, 48, 1);
  const WindowedDataset mixed[] = {a, c};
  CHECK_THROWS_AS(stack(mixed), ShapeError);
}

TEST_CASE("time split keeps segments disjoint and sized") {
  const SeriesSet set = generate_synthetic(3, 1, 21);
  SplitOptions o;
  o.train_weeks = 16;
  o.validation_weeks = 2;
  o.test_weeks = 2;
  const DatasetSplit split = split_by_time(set, o);
  const SplitPlan& p = split.plan;
  CHECK(p.end == 21 * kStepsPerWeek);
  CHECK(p.test_begin - p.validation_begin == 2 * kStepsPerWeek);

  std::size_t max_train = 0, min_val = SIZE_MAX, max_val = 0, min_test = SIZE_MAX;
  for (std::size_t r = 0; r < split.train.rows(); ++r)
    max_train = std::max(max_train, split.train.target_start[r] + o.horizon - 1);
  for (std::size_t r = 0; r < split.validation.rows(); ++r) {
    min_val = std::min(min_val, split.validation.target_start[r]);
    max_val = std::max(max_val, split.validation.target_start[r] + o.horizon - 1);
  }
  for (std::size_t r = 0; r < split.test.rows(); ++r)
    min_test = std::min(min_test, split.test.target_start[r]);
  CHECK(max_train < min_val);
  CHECK(max_val < min_test);

  // Non-overlapping evaluation windows cover every target step exactly once.
  CHECK(split.validation.rows() * o.horizon == set.size() * 2 * 7 * 48);
  CHECK(split.test.rows() * o.horizon == set.size() * 2 * 7 * 48);
  // Per series: every stride-1 window in the training segment.
  CHECK(split.train.rows() == set.size() * (16 * kStepsPerWeek - o.horizon + 1));
}

TEST_CASE("time split demands K history plus all segments") {
  CHECK_THROWS_AS(plan_split(76 * kStepsPerWeek, SplitOptions{}), InsufficientDataError);
  CHECK_NOTHROW(plan_split(77 * kStepsPerWeek, SplitOptions{}));
  CHECK(12 * 7 * 48 == 4032);
}

TEST_CASE("subsampling keeps one row in f per series") {
  const WindowedDataset one = make_windows(ramp(336 + 48 + 23), 336, 48, 1, 0);
  REQUIRE(one.rows() == 24);
  CHECK(subsample(one, 12).rows() == 2);
  const WindowedDataset same = subsample(one, 1);
  CHECK(same.y == one.y);

  std::vector<WindowedDataset> parts;
  for (std::size_t s = 0; s < 15; ++s) parts.push_back(make_windows(ramp(336 + 48 + 100 + s * 7), 336, 48, 1, s));
  const WindowedDataset all = stack(parts);
  const WindowedDataset kept = subsample(all, 12);
  std::map<std::size_t, std::size_t> full, got;
  for (std::size_t s : all.sample_series_index) ++full[s];
  for (std::size_t s : kept.sample_series_index) ++got[s];
  for (auto [s, m] : full) {
    const double expect = static_cast<double>(m) / 12.0;
    CHECK(std::abs(static_cast<double>(got[s]) - expect) <= 1.0);
  }

  // The keep rule partitions rows across the f possible offsets.
  std::size_t total = 0;
  for (std::size_t off = 0; off < 12; ++off)
    total += subsample(all, 12, [off](std::size_t) { return off; }).rows();
  CHECK(total == all.rows());

  // Subsampling inside split_by_time matches subsampling afterwards.
  const SeriesSet set = generate_synthetic(3, 1, 5);
  SplitOptions o;
  o.train_weeks = 2;
  o.validation_weeks = 1;
  o.test_weeks = 1;
  const DatasetSplit full_split = split_by_time(set, o);
  o.train_subsample = 12;
  const DatasetSplit sub_split = split_by_time(set, o);
  const WindowedDataset post = subsample(full_split.train, 12);
  CHECK(sub_split.train.target_start == post.target_start);
  CHECK(sub_split.train.x_lags == post.x_lags);
}

TEST_CASE("restricting to series keeps only flagged rows") {
  std::vector<WindowedDataset> parts;
  for (std::size_t s = 0; s < 3; ++s) parts.push_back(make_windows(ramp(400), 336, 48, 4, s));
  const WindowedDataset all = stack(parts);
  const WindowedDataset mid = restrict_to_series(all, {false, true, false});
  CHECK(mid.rows() == parts[1].rows());
  for (std::size_t s : mid.sample_series_index) CHECK(s == 1);
}

TEST_CASE("training scales divide by the training-segment mean") {
  SeriesSet set;
  set.series.push_back(ramp(10, "a"));
  Series flat = ramp(10, "b");
  std::fill(flat.values.begin(), flat.values.end(), 0.0);
  set.series.push_back(flat);
  SplitPlan plan;
  plan.validation_begin = 5;
  const std::vector<double> scales = training_scales(set, plan);
  CHECK(scales[0] == 2.0);  // mean of 0..4
  CHECK(scales[1] == 1.0);  // non-positive mean falls back to 1
  const SeriesSet r = rescaled(set, scales);
  CHECK(r.series[0].values[4] == 2.0);
}

TEST_CASE("series set validation") {
  SeriesSet set;
  CHECK_THROWS_AS(set.validate(), EmptyInputError);
  set.series.push_back(ramp(10, "a"));
  set.series.push_back(ramp(10, "a"));
  CHECK_THROWS_AS(set.validate(), DuplicateError);
  set.series[1] = ramp(11, "b");
  CHECK_THROWS_AS(set.validate(), ShapeError);
  set.series[1] = ramp(10, "b");
  CHECK_NOTHROW(set.validate());
  CHECK(set.find("b") == std::optional<std::size_t>{1});
  CHECK_FALSE(set.find("c").has_value());
}
