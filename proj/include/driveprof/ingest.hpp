#pragma once

// Parsing and validation of raw sensor logs and behavior-event label files.
//
// File layout: one delimited text file per sensor kind with columns
// timestamp_us,x,y,z (comma separator, dot decimal, header row), plus one
// label file per session with columns behavior,start_us,end_us. Timestamps
// are microseconds since epoch throughout.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "driveprof/core.hpp"

namespace driveprof {

struct Sample {
  int64_t t_us;
  double value;
};

struct SensorTrace {
  SensorKind kind;
  Axis axis;
  std::vector<Sample> samples;
};

struct EventLabel {
  Behavior behavior;
  int64_t start_us;
  int64_t end_us;
};

struct ChannelSummary {
  SensorKind kind;
  Axis axis;
  size_t sample_count;
  int64_t median_interval_us;
  double native_rate_hz;
};

struct SessionSummary {
  std::vector<ChannelSummary> channels;  // canonical channel order
  int64_t first_us;
  int64_t last_us;
  double duration_s;
  size_t event_count;
};

namespace textio {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

inline int64_t parse_i64(std::string_view field, long line_no) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError("expected integer, got '" + std::string(field) + "'", line_no);
  return v;
}

inline double parse_f64(std::string_view field, long line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError("expected number, got '" + std::string(field) + "'", line_no);
  return v;
}

// Round-trip exact formatting for doubles.
inline std::string format_f64(double v) {
  char buf[32];
  int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<size_t>(n));
}

// Yields (line, 1-based line number) for each non-empty line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  long line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t pos = text.find('\n', start);
    std::string_view line =
        pos == std::string_view::npos ? text.substr(start) : text.substr(start, pos - start);
    ++line_no;
    if (!trim(line).empty()) fn(line, line_no);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ValidationError("short write: " + path.string());
}

}  // namespace textio

// Parses one per-sensor file (timestamp_us,x,y,z) into three axis traces.
// Timestamps must be strictly increasing; row count is preserved per axis.
inline std::vector<SensorTrace> parse_sensor_file(std::string_view raw_text, SensorKind kind) {
  std::vector<SensorTrace> traces;
  for (int a = 0; a < kNumAxes; ++a)
    traces.push_back(SensorTrace{kind, static_cast<Axis>(a), {}});

  bool header_seen = false;
  long long row = -1;  // 0-based data row index
  textio::for_each_line(raw_text, [&](std::string_view line, long line_no) {
    if (!header_seen) {
      header_seen = true;  // first non-empty line is the header
      return;
    }
    auto fields = textio::split(line);
    if (fields.size() != 1 + kNumAxes)
      throw ParseError("expected 4 fields (timestamp,x,y,z), got " + std::to_string(fields.size()),
                       line_no);
    ++row;
    int64_t t = textio::parse_i64(fields[0], line_no);
    if (!traces[0].samples.empty() && t <= traces[0].samples.back().t_us)
      throw ValidationError("non-monotonic timestamp at row " + std::to_string(row) + " of " +
                                std::string(sensor_name(kind)) + " file",
                            row);
    for (int a = 0; a < kNumAxes; ++a)
      traces[static_cast<size_t>(a)].samples.push_back(Sample{t, textio::parse_f64(fields[1 + a], line_no)});
  });

  if (!header_seen) throw ParseError("empty file, missing header");
  if (traces[0].samples.empty()) throw ValidationError("no samples");
  return traces;
}

// Inverse of parse_sensor_file; the three traces must share timestamps.
inline std::string write_sensor_file(const std::vector<const SensorTrace*>& axes) {
  if (axes.size() != kNumAxes) throw ValidationError("expected 3 axis traces");
  size_t n = axes[0]->samples.size();
  for (const auto* t : axes)
    if (t->samples.size() != n) throw ValidationError("axis traces differ in length");

  std::string out = "timestamp_us,x,y,z\n";
  for (size_t i = 0; i < n; ++i) {
    out += std::to_string(axes[0]->samples[i].t_us);
    for (const auto* t : axes) {
      out += ',';
      out += textio::format_f64(t->samples[i].value);
    }
    out += '\n';
  }
  return out;
}

// Label file rows: behavior,start_us,end_us. Output sorted by start.
// Overlapping intervals are allowed and preserved.
inline std::vector<EventLabel> parse_event_file(std::string_view raw_text) {
  std::vector<EventLabel> labels;
  bool header_seen = false;
  textio::for_each_line(raw_text, [&](std::string_view line, long line_no) {
    if (!header_seen) {
      header_seen = true;
      return;
    }
    auto fields = textio::split(line);
    if (fields.size() != 3)
      throw ParseError("expected 3 fields (behavior,start_us,end_us)", line_no);
    auto behavior = parse_behavior(fields[0]);
    if (!behavior) throw ParseError("unknown behavior '" + std::string(fields[0]) + "'", line_no);
    int64_t start = textio::parse_i64(fields[1], line_no);
    int64_t end = textio::parse_i64(fields[2], line_no);
    if (start >= end)
      throw ValidationError("event interval must satisfy start < end (line " +
                            std::to_string(line_no) + ")");
    labels.push_back(EventLabel{*behavior, start, end});
  });
  if (!header_seen) throw ParseError("empty label file, missing header");
  std::stable_sort(labels.begin(), labels.end(),
                   [](const EventLabel& a, const EventLabel& b) { return a.start_us < b.start_us; });
  return labels;
}

inline std::string write_event_file(const std::vector<EventLabel>& labels) {
  std::string out = "behavior,start_us,end_us\n";
  for (const auto& l : labels) {
    out += std::string(behavior_name(l.behavior));
    out += ',' + std::to_string(l.start_us) + ',' + std::to_string(l.end_us) + '\n';
  }
  return out;
}

// Checks the 12-channel contract and reports per-channel native rates
// (1 / median inter-sample interval). Order-independent over the trace list.
inline SessionSummary validate_session(const std::vector<SensorTrace>& traces,
                                       const std::vector<EventLabel>& labels) {
  std::array<const SensorTrace*, kNumChannels> by_channel{};
  for (const auto& t : traces) {
    int idx = channel_index(t.kind, t.axis);
    if (by_channel[static_cast<size_t>(idx)] != nullptr)
      throw ValidationError("duplicate channel: " + channel_name(idx));
    by_channel[static_cast<size_t>(idx)] = &t;
  }
  for (int c = 0; c < kNumChannels; ++c)
    if (by_channel[static_cast<size_t>(c)] == nullptr)
      throw ValidationError("missing channel: " + channel_name(c));

  SessionSummary summary{};
  summary.first_us = std::numeric_limits<int64_t>::max();
  summary.last_us = std::numeric_limits<int64_t>::min();
  summary.event_count = labels.size();
  for (int c = 0; c < kNumChannels; ++c) {
    const SensorTrace& t = *by_channel[static_cast<size_t>(c)];
    if (t.samples.size() < 2)
      throw ValidationError("channel " + channel_name(c) + " has fewer than 2 samples");
    std::vector<int64_t> intervals;
    intervals.reserve(t.samples.size() - 1);
    for (size_t i = 1; i < t.samples.size(); ++i) {
      int64_t dt = t.samples[i].t_us - t.samples[i - 1].t_us;
      if (dt <= 0)
        throw ValidationError("non-monotonic timestamp in channel " + channel_name(c),
                              static_cast<long long>(i));
      intervals.push_back(dt);
    }
    std::nth_element(intervals.begin(), intervals.begin() + static_cast<long>(intervals.size() / 2),
                     intervals.end());
    int64_t median = intervals[intervals.size() / 2];
    summary.channels.push_back(ChannelSummary{t.kind, t.axis, t.samples.size(), median,
                                              1e6 / static_cast<double>(median)});
    summary.first_us = std::min(summary.first_us, t.samples.front().t_us);
    summary.last_us = std::max(summary.last_us, t.samples.back().t_us);
  }
  summary.duration_s = static_cast<double>(summary.last_us - summary.first_us) / 1e6;
  return summary;
}

// A full recording session: 12 traces in canonical channel order plus labels.
struct Session {
  std::vector<SensorTrace> traces;  // index = channel_index(kind, axis)
  std::vector<EventLabel> labels;
};

inline std::filesystem::path sensor_file_path(const std::filesystem::path& dir, SensorKind kind) {
  return dir / (std::string(sensor_name(kind)) + ".csv");
}

inline std::filesystem::path label_file_path(const std::filesystem::path& dir) {
  return dir / "labels.csv";
}

inline Session load_session(const std::filesystem::path& dir) {
  Session session;
  session.traces.resize(kNumChannels);
  for (int s = 0; s < kNumSensors; ++s) {
    auto kind = static_cast<SensorKind>(s);
    auto traces = parse_sensor_file(textio::read_file(sensor_file_path(dir, kind)), kind);
    for (auto& t : traces) {
      int idx = channel_index(t.kind, t.axis);
      session.traces[static_cast<size_t>(idx)] = std::move(t);
    }
  }
  auto label_path = label_file_path(dir);
  if (std::filesystem::exists(label_path))
    session.labels = parse_event_file(textio::read_file(label_path));
  return session;
}

inline void save_session(const std::filesystem::path& dir, const Session& session) {
  if (session.traces.size() != kNumChannels)
    throw ValidationError("session must carry exactly 12 channels");
  std::filesystem::create_directories(dir);
  for (int s = 0; s < kNumSensors; ++s) {
    auto kind = static_cast<SensorKind>(s);
    std::vector<const SensorTrace*> axes;
    for (int a = 0; a < kNumAxes; ++a)
      axes.push_back(&session.traces[static_cast<size_t>(channel_index(kind, static_cast<Axis>(a)))]);
    textio::write_file(sensor_file_path(dir, kind), write_sensor_file(axes));
  }
  textio::write_file(label_file_path(dir), write_event_file(session.labels));
}

}  // namespace driveprof
