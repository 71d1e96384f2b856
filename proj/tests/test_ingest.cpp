#include <catch2/catch_amalgamated.hpp>

#include "driveprof/ingest.hpp"

using namespace driveprof;

namespace {

std::string three_row_file() {
  return "timestamp_us,x,y,z\n"
         "1000,0.1,0.2,0.3\n"
         "2000,0.4,0.5,0.6\n"
         "3000,0.7,0.8,0.9\n";
}

// Uniform trace fixture: 12 channels, chosen native intervals.
std::vector<SensorTrace> uniform_session(int64_t interval_us, size_t n = 16) {
  std::vector<SensorTrace> traces;
  for (int c = 0; c < kNumChannels; ++c) {
    SensorTrace t{channel_sensor(c), channel_axis(c), {}};
    for (size_t i = 0; i < n; ++i)
      t.samples.push_back(Sample{static_cast<int64_t>(i) * interval_us, 0.1 * static_cast<double>(i)});
    traces.push_back(std::move(t));
  }
  return traces;
}

}  // namespace

TEST_CASE("parse_sensor_file splits a 3-row file into 3 traces of length 3") {
  auto traces = parse_sensor_file(three_row_file(), SensorKind::Acceleration);
  REQUIRE(traces.size() == 3);
  for (const auto& t : traces) {
    CHECK(t.kind == SensorKind::Acceleration);
    CHECK(t.samples.size() == 3);
  }
  CHECK(traces[0].axis == Axis::X);
  CHECK(traces[0].samples[1].value == 0.4);
  CHECK(traces[2].samples[2].value == 0.9);
  CHECK(traces[1].samples[0].t_us == 1000);
}

TEST_CASE("parse_sensor_file rejects an empty data section") {
  CHECK_THROWS_WITH(parse_sensor_file("timestamp_us,x,y,z\n", SensorKind::Gyroscope),
                    Catch::Matchers::ContainsSubstring("no samples"));
}

TEST_CASE("parse_sensor_file flags a non-monotonic timestamp with its row index") {
  const std::string text =
      "timestamp_us,x,y,z\n"
      "1000,1,1,1\n"
      "1000,2,2,2\n";
  try {
    parse_sensor_file(text, SensorKind::Magnetometer);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.index() == 1);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("non-monotonic"));
  }
}

TEST_CASE("parse_sensor_file reports malformed rows with their line number") {
  const std::string text =
      "timestamp_us,x,y,z\n"
      "1000,1,1,1\n"
      "2000,oops,1,1\n";
  try {
    parse_sensor_file(text, SensorKind::Acceleration);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("sensor file round-trip preserves sample values bit-exactly") {
  Rng rng(7);
  std::string text = "timestamp_us,x,y,z\n";
  for (int i = 0; i < 64; ++i) {
    text += std::to_string(1000 * (i + 1));
    for (int a = 0; a < 3; ++a) text += ',' + textio::format_f64(rng.normal() * 1e3);
    text += '\n';
  }
  auto traces = parse_sensor_file(text, SensorKind::Gyroscope);
  std::vector<const SensorTrace*> axes = {&traces[0], &traces[1], &traces[2]};
  auto traces2 = parse_sensor_file(write_sensor_file(axes), SensorKind::Gyroscope);
  for (int a = 0; a < 3; ++a) {
    REQUIRE(traces2[a].samples.size() == traces[a].samples.size());
    for (size_t i = 0; i < traces[a].samples.size(); ++i) {
      CHECK(traces2[a].samples[i].t_us == traces[a].samples[i].t_us);
      CHECK(traces2[a].samples[i].value == traces[a].samples[i].value);
    }
  }
}

TEST_CASE("parse_event_file accepts a single labeled interval") {
  auto labels = parse_event_file("behavior,start_us,end_us\naggressive_right_turn, 10, 20\n");
  REQUIRE(labels.size() == 1);
  CHECK(labels[0].behavior == Behavior::AggrRightTurn);
  CHECK(labels[0].start_us == 10);
  CHECK(labels[0].end_us == 20);
}

TEST_CASE("parse_event_file rejects start >= end") {
  CHECK_THROWS_AS(parse_event_file("behavior,start_us,end_us\naggressive_brake,10,10\n"),
                  ValidationError);
}

TEST_CASE("parse_event_file rejects unknown behavior names") {
  CHECK_THROWS_AS(parse_event_file("behavior,start_us,end_us\nwarp_speed,1,2\n"), ParseError);
}

TEST_CASE("parse_event_file keeps overlapping aggressive intervals") {
  auto labels = parse_event_file(
      "behavior,start_us,end_us\n"
      "aggressive_brake,0,10\n"
      "aggressive_left_turn,5,15\n");
  REQUIRE(labels.size() == 2);
  CHECK(labels[0].start_us == 0);
  CHECK(labels[1].start_us == 5);
}

TEST_CASE("parse_event_file sorts by start time") {
  auto labels = parse_event_file(
      "behavior,start_us,end_us\n"
      "aggressive_left_turn,50,60\n"
      "aggressive_brake,0,10\n");
  CHECK(labels[0].behavior == Behavior::AggrBrake);
  CHECK(labels[1].behavior == Behavior::AggrLeftTurn);
}

TEST_CASE("validate_session summarizes 12 well-formed channels") {
  auto traces = uniform_session(10'000);
  auto summary = validate_session(traces, {});
  REQUIRE(summary.channels.size() == 12);
  for (const auto& c : summary.channels) CHECK(c.sample_count == 16);
}

TEST_CASE("validate_session names the missing channel") {
  auto traces = uniform_session(10'000);
  traces.pop_back();  // drop gyroscope z
  CHECK_THROWS_WITH(validate_session(traces, {}),
                    Catch::Matchers::ContainsSubstring("gyroscope_z"));
}

TEST_CASE("validate_session rejects duplicate channels") {
  auto traces = uniform_session(10'000);
  traces.push_back(traces.front());
  CHECK_THROWS_WITH(validate_session(traces, {}),
                    Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("validate_session derives the native rate from the median interval") {
  auto traces = uniform_session(10'000);  // one sample every 10 ms
  auto summary = validate_session(traces, {});
  for (const auto& c : summary.channels) {
    CHECK(c.median_interval_us == 10'000);
    CHECK(c.native_rate_hz == Catch::Approx(100.0));
  }
}

TEST_CASE("validate_session is order-independent over the trace list") {
  auto traces = uniform_session(20'000);
  auto summary1 = validate_session(traces, {});
  Rng rng(3);
  rng.shuffle(traces);
  auto summary2 = validate_session(traces, {});
  REQUIRE(summary1.channels.size() == summary2.channels.size());
  for (size_t i = 0; i < summary1.channels.size(); ++i) {
    CHECK(summary1.channels[i].kind == summary2.channels[i].kind);
    CHECK(summary1.channels[i].axis == summary2.channels[i].axis);
    CHECK(summary1.channels[i].median_interval_us == summary2.channels[i].median_interval_us);
  }
}

TEST_CASE("event file round-trip") {
  std::vector<EventLabel> labels = {
      {Behavior::AggrBrake, 100, 300},
      {Behavior::AggrLaneChangeLeft, 250, 500},
  };
  auto parsed = parse_event_file(write_event_file(labels));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].behavior == Behavior::AggrBrake);
  CHECK(parsed[1].end_us == 500);
}
