#pragma once

// Deterministic synthetic driving sessions: sum-of-sinusoid baselines with
// Gaussian noise per channel, sampled at heterogeneous native rates, plus
// injected aggressive events with behavior-specific perturbation profiles.
// Emits exactly the traces/labels the ingest layer consumes.

#include <json.hpp>

#include "driveprof/ingest.hpp"

namespace driveprof {

struct SinComponent {
  double amplitude;
  double freq_hz;
  double phase;
};

struct ChannelBaseline {
  double offset = 0.0;
  std::vector<SinComponent> components;
  double noise_amp = 0.0;
};

struct SynthEvent {
  Behavior behavior;
  double start_s;
  double duration_s;
  double amplitude;  // peak deviation multiplier for the behavior's profile
};

struct SynthSpec {
  double duration_s = 60.0;
  std::array<int, kNumSensors> rates_hz = {100, 25, 10, 50};  // heterogeneous on purpose
  std::array<ChannelBaseline, kNumChannels> baseline;
  std::vector<SynthEvent> events;
  uint64_t seed = 1;
};

enum class PerturbShape { Pulse, SCurve };

struct ChannelPerturb {
  int channel;
  double weight;
  PerturbShape shape;
};

// Which channels a maneuver disturbs and how. Turns and lane changes show
// up on yaw rate and lateral acceleration; brake/throttle on longitudinal.
inline std::vector<ChannelPerturb> perturb_profile(Behavior behavior) {
  const int acc_x = channel_index(SensorKind::Acceleration, Axis::X);
  const int acc_y = channel_index(SensorKind::Acceleration, Axis::Y);
  const int lin_y = channel_index(SensorKind::LinearAcceleration, Axis::Y);
  const int lin_x = channel_index(SensorKind::LinearAcceleration, Axis::X);
  const int gyr_z = channel_index(SensorKind::Gyroscope, Axis::Z);
  switch (behavior) {
    case Behavior::AggrBrake:
      return {{acc_y, -1.0, PerturbShape::Pulse}, {lin_y, -1.0, PerturbShape::Pulse}};
    case Behavior::AggrAcceleration:
      return {{acc_y, 1.0, PerturbShape::Pulse}, {lin_y, 1.0, PerturbShape::Pulse}};
    case Behavior::AggrLeftTurn:
      return {{gyr_z, 1.0, PerturbShape::Pulse},
              {acc_x, -0.6, PerturbShape::Pulse},
              {lin_x, -0.6, PerturbShape::Pulse}};
    case Behavior::AggrRightTurn:
      return {{gyr_z, -1.0, PerturbShape::Pulse},
              {acc_x, 0.6, PerturbShape::Pulse},
              {lin_x, 0.6, PerturbShape::Pulse}};
    case Behavior::AggrLaneChangeLeft:
      return {{gyr_z, 1.0, PerturbShape::SCurve},
              {acc_x, -0.6, PerturbShape::SCurve},
              {lin_x, -0.6, PerturbShape::SCurve}};
    case Behavior::AggrLaneChangeRight:
      return {{gyr_z, -1.0, PerturbShape::SCurve},
              {acc_x, 0.6, PerturbShape::SCurve},
              {lin_x, 0.6, PerturbShape::SCurve}};
    case Behavior::Normal:
      return {};
  }
  return {};
}

inline double perturb_value(PerturbShape shape, double u) {
  constexpr double pi = 3.14159265358979323846;
  switch (shape) {
    case PerturbShape::Pulse: return std::sin(pi * u);
    case PerturbShape::SCurve: return std::sin(2.0 * pi * u);
  }
  return 0.0;
}

inline void validate_spec(const SynthSpec& spec) {
  if (spec.duration_s <= 0.0) throw ConfigError("duration must be positive");
  for (int r : spec.rates_hz)
    if (r <= 0 || 1'000'000 % r != 0) throw ConfigError("native rates must divide 1e6 us");
  for (const auto& ev : spec.events) {
    if (ev.behavior == Behavior::Normal) throw ConfigError("events must be aggressive behaviors");
    if (ev.duration_s <= 0.0) throw ConfigError("event duration must be positive");
    if (ev.start_s < 0.0 || ev.start_s + ev.duration_s > spec.duration_s)
      throw ConfigError("event must lie within [0, duration]");
    if (ev.amplitude < 0.0) throw ConfigError("event amplitude must be >= 0");
  }
}

// Baseline value of one channel at time t (seconds), noise excluded.
inline double baseline_value(const ChannelBaseline& base, double t) {
  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  double v = base.offset;
  for (const auto& c : base.components) v += c.amplitude * std::sin(two_pi * c.freq_hz * t + c.phase);
  return v;
}

inline double event_contribution(const SynthSpec& spec, int channel, double t) {
  double v = 0.0;
  for (const auto& ev : spec.events) {
    if (t < ev.start_s || t >= ev.start_s + ev.duration_s) continue;
    const double u = (t - ev.start_s) / ev.duration_s;
    for (const auto& p : perturb_profile(ev.behavior))
      if (p.channel == channel) v += ev.amplitude * p.weight * perturb_value(p.shape, u);
  }
  return v;
}

// Generates the 12 traces (canonical channel order, native rates) and the
// event labels. Bit-identical for identical specs.
inline Session generate(const SynthSpec& spec) {
  validate_spec(spec);
  Session session;
  session.traces.resize(kNumChannels);

  for (int c = 0; c < kNumChannels; ++c) {
    const auto kind = channel_sensor(c);
    const int rate = spec.rates_hz[static_cast<size_t>(kind)];
    const int64_t step_us = 1'000'000 / rate;
    const auto n = static_cast<size_t>(spec.duration_s * rate);
    Rng noise(derive_seed(spec.seed, static_cast<uint64_t>(c) + 0x100));
    const ChannelBaseline& base = spec.baseline[static_cast<size_t>(c)];

    SensorTrace trace{kind, channel_axis(c), {}};
    trace.samples.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      const int64_t t_us = static_cast<int64_t>(i) * step_us;
      const double t = static_cast<double>(t_us) / 1e6;
      double v = baseline_value(base, t) + event_contribution(spec, c, t);
      if (base.noise_amp > 0.0) v += base.noise_amp * noise.normal();
      trace.samples.push_back(Sample{t_us, v});
    }
    session.traces[static_cast<size_t>(c)] = std::move(trace);
  }

  for (const auto& ev : spec.events)
    session.labels.push_back(EventLabel{ev.behavior,
                                        static_cast<int64_t>(std::llround(ev.start_s * 1e6)),
                                        static_cast<int64_t>(std::llround((ev.start_s + ev.duration_s) * 1e6))});
  std::stable_sort(session.labels.begin(), session.labels.end(),
                   [](const EventLabel& a, const EventLabel& b) { return a.start_us < b.start_us; });
  return session;
}

// Smooth, learnable per-channel baselines: a couple of slow sinusoids whose
// frequencies/phases vary deterministically by channel, plus mild noise.
inline std::array<ChannelBaseline, kNumChannels> default_baseline(uint64_t seed,
                                                                  double noise_amp = 0.05) {
  std::array<ChannelBaseline, kNumChannels> baseline;
  Rng rng(derive_seed(seed, 0x42));
  for (int c = 0; c < kNumChannels; ++c) {
    ChannelBaseline b;
    b.offset = rng.uniform(-0.5, 0.5);
    const int parts = 2 + static_cast<int>(rng.below(2));
    for (int k = 0; k < parts; ++k)
      b.components.push_back(SinComponent{rng.uniform(0.2, 0.7), rng.uniform(0.1, 0.8),
                                          rng.uniform(0.0, 6.283185307179586)});
    b.noise_amp = noise_amp;
    baseline[static_cast<size_t>(c)] = b;
  }
  return baseline;
}

struct NamedSpec {
  std::string name;
  SynthSpec spec;
};

// Canonical desk-scale suite: one long pure-normal session, one session per
// aggressive class with six 2 s events in the holdout half of the timeline,
// and a null session whose "events" have zero amplitude (separation floor).
// Event starts sit on 20 ms bin boundaries so frame labels match exactly.
inline std::vector<NamedSpec> standard_suite(uint64_t seed) {
  std::vector<NamedSpec> suite;

  SynthSpec normal;
  normal.duration_s = 120.0;
  normal.seed = derive_seed(seed, 1);
  normal.baseline = default_baseline(normal.seed);
  suite.push_back({"normal", normal});

  // amplitudes: strong dynamics for turns/brake/lane changes, deliberately
  // faint for aggressive acceleration (the hard class)
  const std::vector<std::pair<Behavior, double>> classes = {
      {Behavior::AggrBrake, 3.0},           {Behavior::AggrAcceleration, 0.45},
      {Behavior::AggrLeftTurn, 3.0},        {Behavior::AggrRightTurn, 3.0},
      {Behavior::AggrLaneChangeRight, 2.5}, {Behavior::AggrLaneChangeLeft, 2.5},
  };
  uint64_t salt = 2;
  for (const auto& [behavior, amplitude] : classes) {
    SynthSpec spec;
    spec.duration_s = 80.0;
    spec.seed = derive_seed(seed, salt++);
    spec.baseline = default_baseline(spec.seed);
    for (int k = 0; k < 6; ++k)
      spec.events.push_back(SynthEvent{behavior, 44.0 + 6.0 * k, 2.0, amplitude});
    suite.push_back({std::string(behavior_name(behavior)), spec});
  }

  SynthSpec null_spec;
  null_spec.duration_s = 80.0;
  null_spec.seed = derive_seed(seed, salt++);
  null_spec.baseline = default_baseline(null_spec.seed);
  for (int k = 0; k < 6; ++k)
    null_spec.events.push_back(SynthEvent{Behavior::AggrBrake, 44.0 + 6.0 * k, 2.0, 0.0});
  suite.push_back({"null", null_spec});

  return suite;
}

// JSON (de)serialization of specs, for the CLI.
inline nlohmann::ordered_json spec_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["duration_s"] = spec.duration_s;
  j["seed"] = spec.seed;
  for (int s = 0; s < kNumSensors; ++s)
    j["rates_hz"][std::string(sensor_name(static_cast<SensorKind>(s)))] =
        spec.rates_hz[static_cast<size_t>(s)];
  for (int c = 0; c < kNumChannels; ++c) {
    const auto& b = spec.baseline[static_cast<size_t>(c)];
    nlohmann::ordered_json jb;
    jb["offset"] = b.offset;
    jb["noise_amp"] = b.noise_amp;
    for (const auto& comp : b.components)
      jb["components"].push_back({{"amplitude", comp.amplitude},
                                  {"freq_hz", comp.freq_hz},
                                  {"phase", comp.phase}});
    j["baseline"][channel_name(c)] = jb;
  }
  for (const auto& ev : spec.events)
    j["events"].push_back({{"behavior", std::string(behavior_name(ev.behavior))},
                           {"start_s", ev.start_s},
                           {"duration_s", ev.duration_s},
                           {"amplitude", ev.amplitude}});
  return j;
}

inline SynthSpec spec_from_json(const nlohmann::json& j) {
  SynthSpec spec;
  spec.duration_s = j.at("duration_s").get<double>();
  spec.seed = j.at("seed").get<uint64_t>();
  if (j.contains("rates_hz"))
    for (int s = 0; s < kNumSensors; ++s) {
      const auto key = std::string(sensor_name(static_cast<SensorKind>(s)));
      if (j["rates_hz"].contains(key)) spec.rates_hz[static_cast<size_t>(s)] = j["rates_hz"][key].get<int>();
    }
  if (j.contains("baseline"))
    for (int c = 0; c < kNumChannels; ++c) {
      const auto key = channel_name(c);
      if (!j["baseline"].contains(key)) continue;
      const auto& jb = j["baseline"][key];
      ChannelBaseline b;
      b.offset = jb.value("offset", 0.0);
      b.noise_amp = jb.value("noise_amp", 0.0);
      if (jb.contains("components"))
        for (const auto& jc : jb["components"])
          b.components.push_back(SinComponent{jc.at("amplitude").get<double>(),
                                              jc.at("freq_hz").get<double>(),
                                              jc.at("phase").get<double>()});
      spec.baseline[static_cast<size_t>(c)] = b;
    }
  if (j.contains("events"))
    for (const auto& je : j["events"]) {
      auto behavior = parse_behavior(je.at("behavior").get<std::string>());
      if (!behavior) throw ConfigError("unknown behavior in synth spec");
      spec.events.push_back(SynthEvent{*behavior, je.at("start_s").get<double>(),
                                       je.at("duration_s").get<double>(),
                                       je.at("amplitude").get<double>()});
    }
  return spec;
}

}  // namespace driveprof
