#pragma once

// Shared vocabulary for the driver-profiling pipeline: sensor/behavior enums,
// error types, a deterministic RNG and the FNV-1a hash used for provenance.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace driveprof {

enum class SensorKind { Acceleration = 0, LinearAcceleration = 1, Magnetometer = 2, Gyroscope = 3 };
enum class Axis { X = 0, Y = 1, Z = 2 };

// One normal class plus the six aggressive maneuvers.
enum class Behavior {
  Normal = 0,
  AggrBrake = 1,
  AggrAcceleration = 2,
  AggrLeftTurn = 3,
  AggrRightTurn = 4,
  AggrLaneChangeRight = 5,
  AggrLaneChangeLeft = 6,
};

inline constexpr int kNumSensors = 4;
inline constexpr int kNumAxes = 3;
inline constexpr int kNumChannels = kNumSensors * kNumAxes;  // 12 features per frame
inline constexpr int kNumBehaviors = 7;

inline constexpr std::array<Behavior, 6> kAggressiveBehaviors = {
    Behavior::AggrBrake,          Behavior::AggrAcceleration,    Behavior::AggrLeftTurn,
    Behavior::AggrRightTurn,      Behavior::AggrLaneChangeRight, Behavior::AggrLaneChangeLeft,
};

constexpr int channel_index(SensorKind kind, Axis axis) {
  return static_cast<int>(kind) * kNumAxes + static_cast<int>(axis);
}

constexpr SensorKind channel_sensor(int channel) { return static_cast<SensorKind>(channel / kNumAxes); }
constexpr Axis channel_axis(int channel) { return static_cast<Axis>(channel % kNumAxes); }

inline std::string_view sensor_name(SensorKind kind) {
  switch (kind) {
    case SensorKind::Acceleration: return "acceleration";
    case SensorKind::LinearAcceleration: return "linear_acceleration";
    case SensorKind::Magnetometer: return "magnetometer";
    case SensorKind::Gyroscope: return "gyroscope";
  }
  return "unknown";
}

inline std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

inline std::string channel_name(int channel) {
  return std::string(sensor_name(channel_sensor(channel))) + "_" +
         std::string(axis_name(channel_axis(channel)));
}

inline std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::Normal: return "normal";
    case Behavior::AggrBrake: return "aggressive_brake";
    case Behavior::AggrAcceleration: return "aggressive_acceleration";
    case Behavior::AggrLeftTurn: return "aggressive_left_turn";
    case Behavior::AggrRightTurn: return "aggressive_right_turn";
    case Behavior::AggrLaneChangeRight: return "aggressive_lane_change_right";
    case Behavior::AggrLaneChangeLeft: return "aggressive_lane_change_left";
  }
  return "unknown";
}

inline std::optional<Behavior> parse_behavior(std::string_view name) {
  for (int i = 0; i < kNumBehaviors; ++i) {
    auto b = static_cast<Behavior>(i);
    if (behavior_name(b) == name) return b;
  }
  return std::nullopt;
}

// Raised for malformed input text; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, long line = -1)
      : std::runtime_error(line >= 0 ? message + " (line " + std::to_string(line) + ")" : message),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Raised when structurally valid input violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string message, long long index = -1)
      : std::runtime_error(std::move(message)), index_(index) {}
  long long index() const { return index_; }

 private:
  long long index_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit, used for file/artifact provenance hashes.
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    auto bytes = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      hash_ ^= bytes[i];
      hash_ *= 0x100000001b3ull;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <typename T>
  void update_value(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    update(&v, sizeof(v));
  }
  uint64_t value() const { return hash_; }
  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t h = hash_;
    for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
    return out;
  }

 private:
  uint64_t hash_ = 0xcbf29ce484222325ull;
};

inline uint64_t fnv1a(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.value();
}

// Deterministic RNG. mt19937_64 is bit-exact across implementations; the
// distributions are hand-rolled because std::*_distribution is not.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // [0, n)
  uint64_t below(uint64_t n) { return gen_() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives a child seed for an independent job (e.g. one grid cell).
inline uint64_t derive_seed(uint64_t base_seed, uint64_t salt) {
  Fnv1a h;
  h.update_value(base_seed);
  h.update_value(salt);
  return h.value();
}

}  // namespace driveprof
