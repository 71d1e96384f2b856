#pragma once

// Turns 12 multi-rate traces into a uniform 50 Hz frame matrix, scales it
// with a MinMax scaler fitted on normal frames only, and slices it into
// (window, next-frame) pairs.

#include <Eigen/Dense>

#include "driveprof/ingest.hpp"

namespace driveprof {

inline constexpr int kTargetRateHz = 50;

struct FrameSeries {
  int64_t start_us = 0;
  int rate_hz = kTargetRateHz;
  Eigen::MatrixXd frames;              // N x 12
  std::vector<Behavior> frame_labels;  // length N

  Eigen::Index frame_count() const { return frames.rows(); }
  int64_t bin_us() const { return 1'000'000 / rate_hz; }
  int64_t frame_time_us(Eigen::Index i) const { return start_us + i * bin_us(); }
};

// Resamples one trace onto the uniform grid over [t0, t1). A bin that
// contains native samples takes the first one; an empty bin holds the most
// recent earlier value (zero-order hold).
inline std::vector<double> resample_channel(const SensorTrace& trace, int target_rate_hz,
                                            int64_t t0, int64_t t1) {
  if (trace.samples.empty()) throw ValidationError("cannot resample an empty trace");
  if (target_rate_hz <= 0 || 1'000'000 % target_rate_hz != 0)
    throw ValidationError("target rate must divide 1e6 us");
  if (t0 < trace.samples.front().t_us)
    throw ValidationError("span starts before first sample; no value to hold");
  if (t1 <= t0) throw ValidationError("empty resample span");

  const int64_t bin = 1'000'000 / target_rate_hz;
  const auto n_bins = static_cast<size_t>((t1 - t0) / bin);
  std::vector<double> out;
  out.reserve(n_bins);

  const auto& samples = trace.samples;
  size_t i = 0;
  double held = samples.front().value;
  for (size_t b = 0; b < n_bins; ++b) {
    const int64_t bin_start = t0 + static_cast<int64_t>(b) * bin;
    const int64_t bin_end = bin_start + bin;
    while (i < samples.size() && samples[i].t_us < bin_start) held = samples[i++].value;
    if (i < samples.size() && samples[i].t_us < bin_end) {
      out.push_back(samples[i].value);  // first sample in the bin
    } else {
      out.push_back(held);
    }
  }
  return out;
}

// Stitches 12 equally long resampled channels (canonical order) into an
// N x 12 frame matrix and derives per-frame labels from event intervals.
// A frame is labeled by the interval containing its timestamp; when
// intervals overlap, the later-starting one wins. Default is Normal.
inline FrameSeries assemble_frames(const std::array<std::vector<double>, kNumChannels>& channels,
                                   const std::vector<EventLabel>& labels, int64_t start_us,
                                   int rate_hz = kTargetRateHz) {
  const size_t n = channels[0].size();
  for (const auto& c : channels)
    if (c.size() != n) throw ValidationError("resampled channels differ in length");

  FrameSeries series;
  series.start_us = start_us;
  series.rate_hz = rate_hz;
  series.frames.resize(static_cast<Eigen::Index>(n), kNumChannels);
  for (int c = 0; c < kNumChannels; ++c)
    for (size_t i = 0; i < n; ++i)
      series.frames(static_cast<Eigen::Index>(i), c) = channels[static_cast<size_t>(c)][i];

  std::vector<EventLabel> sorted = labels;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const EventLabel& a, const EventLabel& b) { return a.start_us < b.start_us; });
  series.frame_labels.assign(n, Behavior::Normal);
  for (size_t i = 0; i < n; ++i) {
    const int64_t t = series.frame_time_us(static_cast<Eigen::Index>(i));
    for (const auto& ev : sorted)
      if (ev.start_us <= t && t < ev.end_us) series.frame_labels[i] = ev.behavior;
  }
  return series;
}

struct ScalerParams {
  Eigen::VectorXd vmin{kNumChannels};
  Eigen::VectorXd vmax{kNumChannels};
  std::array<bool, kNumChannels> degenerate{};  // min == max for that feature
  size_t normal_frames_used = 0;
  uint64_t provenance_hash = 0;
};

inline uint64_t scaler_hash(const Eigen::VectorXd& vmin, const Eigen::VectorXd& vmax,
                            size_t frames_used) {
  Fnv1a h;
  for (int j = 0; j < kNumChannels; ++j) h.update_value(vmin[j]);
  for (int j = 0; j < kNumChannels; ++j) h.update_value(vmax[j]);
  h.update_value(frames_used);
  return h.value();
}

// Column-wise extrema over Normal-labeled frames, optionally restricted to
// the first `end_frame` frames of each series (the training block).
inline ScalerParams fit_scaler(const std::vector<const FrameSeries*>& series_list,
                               const std::vector<Eigen::Index>& end_frames) {
  if (series_list.size() != end_frames.size())
    throw ValidationError("fit_scaler: series/end_frames size mismatch");
  ScalerParams params;
  params.vmin.setConstant(std::numeric_limits<double>::infinity());
  params.vmax.setConstant(-std::numeric_limits<double>::infinity());
  size_t used = 0;
  for (size_t s = 0; s < series_list.size(); ++s) {
    const FrameSeries& fs = *series_list[s];
    const Eigen::Index end = end_frames[s] < 0 ? fs.frame_count() : end_frames[s];
    for (Eigen::Index i = 0; i < std::min(end, fs.frame_count()); ++i) {
      if (fs.frame_labels[static_cast<size_t>(i)] != Behavior::Normal) continue;
      ++used;
      for (int j = 0; j < kNumChannels; ++j) {
        params.vmin[j] = std::min(params.vmin[j], fs.frames(i, j));
        params.vmax[j] = std::max(params.vmax[j], fs.frames(i, j));
      }
    }
  }
  if (used < 2) throw ValidationError("fit_scaler needs at least 2 Normal frames");
  for (int j = 0; j < kNumChannels; ++j)
    params.degenerate[static_cast<size_t>(j)] = !(params.vmin[j] < params.vmax[j]);
  params.normal_frames_used = used;
  params.provenance_hash = scaler_hash(params.vmin, params.vmax, used);
  return params;
}

inline ScalerParams fit_scaler(const FrameSeries& series, Eigen::Index end_frame = -1) {
  return fit_scaler(std::vector<const FrameSeries*>{&series}, {end_frame});
}

// x -> (x - min) / (max - min), no clamping; degenerate features map to 0.
inline FrameSeries apply_scaler(const FrameSeries& series, const ScalerParams& params) {
  FrameSeries out = series;
  for (int j = 0; j < kNumChannels; ++j) {
    if (params.degenerate[static_cast<size_t>(j)]) {
      out.frames.col(j).setZero();
    } else {
      const double span = params.vmax[j] - params.vmin[j];
      out.frames.col(j) = (series.frames.col(j).array() - params.vmin[j]) / span;
    }
  }
  return out;
}

// Scaler artifact: small key-value text document, round-trip exact.
inline std::string write_scaler(const ScalerParams& params) {
  std::string out = "driveprof_scaler v1\n";
  out += "frames_used=" + std::to_string(params.normal_frames_used) + "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(params.provenance_hash));
  out += "hash=";
  out += buf;
  out += "\n";
  for (int j = 0; j < kNumChannels; ++j) {
    out += channel_name(j) + ".min=" + textio::format_f64(params.vmin[j]) + "\n";
    out += channel_name(j) + ".max=" + textio::format_f64(params.vmax[j]) + "\n";
  }
  return out;
}

inline ScalerParams parse_scaler(std::string_view text) {
  ScalerParams params;
  bool magic_seen = false;
  textio::for_each_line(text, [&](std::string_view line, long line_no) {
    line = textio::trim(line);
    if (!magic_seen) {
      if (line != "driveprof_scaler v1") throw ParseError("bad scaler artifact magic", line_no);
      magic_seen = true;
      return;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    std::string key(line.substr(0, eq));
    std::string_view value = line.substr(eq + 1);
    if (key == "frames_used") {
      params.normal_frames_used = static_cast<size_t>(textio::parse_i64(value, line_no));
    } else if (key == "hash") {
      params.provenance_hash = std::stoull(std::string(value), nullptr, 16);
    } else {
      for (int j = 0; j < kNumChannels; ++j) {
        if (key == channel_name(j) + ".min") params.vmin[j] = textio::parse_f64(value, line_no);
        if (key == channel_name(j) + ".max") params.vmax[j] = textio::parse_f64(value, line_no);
      }
    }
  });
  if (!magic_seen) throw ParseError("empty scaler artifact");
  for (int j = 0; j < kNumChannels; ++j)
    params.degenerate[static_cast<size_t>(j)] = !(params.vmin[j] < params.vmax[j]);
  const uint64_t expect = scaler_hash(params.vmin, params.vmax, params.normal_frames_used);
  if (expect != params.provenance_hash)
    throw ValidationError("scaler artifact hash mismatch (corrupt or edited)");
  return params;
}

// A window is identified by the index of its target frame: the input is
// frames [origin - W, origin) and the target is frame `origin`. The pair
// carries the label of the target frame.
struct WindowPair {
  Eigen::Index origin;
  Behavior label;
};

struct WindowSet {
  int window_size = 0;
  std::vector<WindowPair> pairs;
};

// Stride-1 sliding windows: N - W pairs for N frames. In strict mode a pair
// is kept only when all W + 1 frames share the target's label.
inline WindowSet slide_windows(const FrameSeries& series, int window_size,
                               bool strict_labels = false) {
  const Eigen::Index n = series.frame_count();
  if (window_size < 1) throw ValidationError("window size must be positive");
  if (n <= window_size) throw ValidationError("series shorter than window");

  WindowSet set;
  set.window_size = window_size;
  set.pairs.reserve(static_cast<size_t>(n - window_size));
  for (Eigen::Index origin = window_size; origin < n; ++origin) {
    const Behavior label = series.frame_labels[static_cast<size_t>(origin)];
    if (strict_labels) {
      bool uniform = true;
      for (Eigen::Index i = origin - window_size; i < origin && uniform; ++i)
        uniform = series.frame_labels[static_cast<size_t>(i)] == label;
      if (!uniform) continue;
    }
    set.pairs.push_back(WindowPair{origin, label});
  }
  return set;
}

inline Eigen::Block<const Eigen::MatrixXd> window_input(const FrameSeries& series, int window_size,
                                                        const WindowPair& pair) {
  return series.frames.middleRows(pair.origin - window_size, window_size);
}

inline Eigen::VectorXd window_target(const FrameSeries& series, const WindowPair& pair) {
  return series.frames.row(pair.origin).transpose();
}

// Full preprocessing of one ingested session: common span, resample all 12
// channels, assemble frames. The span starts at the latest first-sample
// across channels (so every channel has a value to hold) and ends at the
// earliest last-sample.
inline FrameSeries session_to_frames(const Session& session, int rate_hz = kTargetRateHz) {
  if (session.traces.size() != kNumChannels)
    throw ValidationError("session must carry exactly 12 channels");
  int64_t t0 = std::numeric_limits<int64_t>::min();
  int64_t t1 = std::numeric_limits<int64_t>::max();
  for (const auto& t : session.traces) {
    if (t.samples.empty()) throw ValidationError("empty channel in session");
    t0 = std::max(t0, t.samples.front().t_us);
    t1 = std::min(t1, t.samples.back().t_us);
  }
  if (t1 <= t0) throw ValidationError("channels share no common time span");
  std::array<std::vector<double>, kNumChannels> channels;
  for (int c = 0; c < kNumChannels; ++c)
    channels[static_cast<size_t>(c)] = resample_channel(session.traces[static_cast<size_t>(c)],
                                                        rate_hz, t0, t1);
  return assemble_frames(channels, session.labels, t0, rate_hz);
}

}  // namespace driveprof
