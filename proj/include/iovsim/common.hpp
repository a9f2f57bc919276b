#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace iovsim {

using VehicleId = std::int64_t;
using ServiceId = int;  // 1..S
using EdgeId = int;     // 1..E
using Tick = int;       // 1..horizon

/// Marker for "served from the cloud" (no edge hosts the service).
inline constexpr EdgeId kCloud = 0;

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

struct Area {
  double width = 10000.0;   // meters
  double height = 10000.0;  // meters
  friend bool operator==(const Area&, const Area&) = default;

  bool contains(Point p) const { return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height; }
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Independent random stream keyed by (seed, tags...). Streams for different tag tuples never share
/// state, so adding a consumer or a sweep cell leaves every other stream untouched.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * tags.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto t : tags) {
    words.push_back(static_cast<std::uint32_t>(t));
    words.push_back(static_cast<std::uint32_t>(t >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Stream tags.
namespace stream {
inline constexpr std::uint64_t kMobility = 0x6d6f62;
inline constexpr std::uint64_t kRequests = 0x726571;
inline constexpr std::uint64_t kCompromise = 0x636d70;
inline constexpr std::uint64_t kDeploy = 0x64706c;
inline constexpr std::uint64_t kPoison = 0x706f69;
inline constexpr std::uint64_t kCritic = 0x637269;
inline constexpr std::uint64_t kTraining = 0x74726e;
inline constexpr std::uint64_t kActor = 0x616374;
}  // namespace stream

}  // namespace iovsim
