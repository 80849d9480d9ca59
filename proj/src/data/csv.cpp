#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "glocal/data.hpp"
#include "glocal/errors.hpp"

namespace glocal {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    std::string_view field = line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_value(std::string_view text, std::size_t line_no) {
  double v = 0.0;
  const char* first = text.data();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValueError("line " + std::to_string(line_no) + ": cannot parse value '" +
                     std::string(text) + "'");
  if (!std::isfinite(v))
    throw ValueError("line " + std::to_string(line_no) + ": non-finite value '" +
                     std::string(text) + "'");
  return v;
}

struct PendingSeries {
  std::string id;
  AggregateType type = AggregateType::Single;
  std::vector<std::pair<Timestamp, double>> rows;
};

}  // namespace

SeriesSet load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  int col_ts = -1, col_id = -1, col_value = -1, col_agg = -1;
  std::vector<PendingSeries> pending;
  std::unordered_map<std::string, std::size_t> index_of;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (fields[c] == "timestamp") col_ts = static_cast<int>(c);
        else if (fields[c] == "id") col_id = static_cast<int>(c);
        else if (fields[c] == "value") col_value = static_cast<int>(c);
        else if (fields[c] == "agg") col_agg = static_cast<int>(c);
      }
      if (col_ts < 0 || col_id < 0 || col_value < 0)
        throw ValueError("'" + path.string() + "': header must contain timestamp,id,value");
      have_header = true;
      continue;
    }
    const int needed = std::max({col_ts, col_id, col_value, col_agg});
    if (static_cast<int>(fields.size()) <= needed)
      throw ValueError("line " + std::to_string(line_no) + ": too few fields");

    const std::string id(fields[col_id]);
    auto [it, inserted] = index_of.try_emplace(id, pending.size());
    if (inserted) {
      pending.push_back({id, AggregateType::Single, {}});
      if (col_agg >= 0 && !fields[col_agg].empty())
        pending.back().type = parse_aggregate_type(fields[col_agg]);
    }
    const Timestamp t = parse_timestamp(fields[col_ts]);
    if (t.time_since_epoch().count() % kStep.count() != 0)
      throw GridError("line " + std::to_string(line_no) + ": timestamp off the half-hour grid");
    pending[it->second].rows.emplace_back(t, parse_value(fields[col_value], line_no));
  }
  if (pending.empty()) throw EmptyInputError("'" + path.string() + "' holds no data rows");

  SeriesSet set;
  set.series.reserve(pending.size());
  for (PendingSeries& p : pending) {
    std::stable_sort(p.rows.begin(), p.rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    Series s;
    s.id = p.id;
    s.aggregate_type = p.type;
    s.start = p.rows.front().first;
    s.values.reserve(p.rows.size());
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      if (i > 0) {
        const auto delta = p.rows[i].first - p.rows[i - 1].first;
        if (delta.count() == 0)
          throw DuplicateError("duplicate row for '" + p.id + "' at " +
                               format_timestamp(p.rows[i].first));
        if (delta != kStep) throw GapError(p.id, format_timestamp(p.rows[i].first));
      }
      s.values.push_back(p.rows[i].second);
    }
    set.series.push_back(std::move(s));
  }
  set.validate();
  return set;
}

void write_csv(const SeriesSet& set, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  out << "timestamp,id,value,agg\n";
  char buf[64];
  for (const Series& s : set.series) {
    const std::string agg(to_string(s.aggregate_type));
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, s.values[i],
                                     std::chars_format::general, 17);
      out << format_timestamp(s.time_at(i)) << ',' << s.id << ',' << std::string_view(buf, end - buf)
          << ',' << agg << '\n';
    }
  }
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

}  // namespace glocal
