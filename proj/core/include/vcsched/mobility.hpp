#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

namespace vcsched::mobility {

/// 0-based vehicle index; index 0 is the task owner (vehicle id 1).
using VehicleIdx = std::size_t;
inline constexpr VehicleIdx kOwner = 0;

inline constexpr double kForever = std::numeric_limits<double>::infinity();

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Region {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1000.0;
  double y_max = 1000.0;

  Point center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
};

/// Speeds in m/s, lengths in metres, times in seconds.
struct MobilityParams {
  double mu_g = 50.0 / 3.6;
  double sigma_g = 10.0 / 3.6;
  double g_min = 5.0;
  double g_max = 25.0;
  double coverage_d = 1000.0;
  double slot_length = 1.0;
  Region region;
  double arrival_min = 1.0;
  double arrival_max = 5.0;
  /// Slots simulated for the always-present owner before its position is held.
  std::int64_t horizon_slots = 3600;

  void check() const;
};

struct CapabilityRange {
  double min_ghz = 1.0;
  double max_ghz = 10.0;
};

struct VehicleState {
  std::size_t id = 0;  ///< 1-based; 1 is the task owner
  double speed_g = 0.0;
  double capability_f = 0.0;  ///< GHz
  double arrival_at = 0.0;
  double departure_dt = 0.0;
  std::int64_t first_slot = 0;
  std::vector<Point> track;  ///< positions at slots first_slot, first_slot+1, ...
  std::int64_t source_id = 0;  ///< vehicle id in the originating trace, if any

  bool present_at(double t) const { return t >= arrival_at && t <= departure_dt; }

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
  /// Position at `slot`, held at the first/last recorded sample outside the
  /// recorded range.
  Point position(std::int64_t slot) const;
  std::int64_t last_slot() const { return first_slot + static_cast<std::int64_t>(track.size()) - 1; }
};

class Fleet {
 public:
  Fleet() = default;
  Fleet(std::vector<VehicleState> vehicles, MobilityParams params);

  std::size_t size() const { return vehicles_.size(); }
  bool empty() const { return vehicles_.empty(); }
  const VehicleState& vehicle(VehicleIdx m) const { return vehicles_.at(m); }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const MobilityParams& params() const { return params_; }
  double max_capability() const;

  /// Positions normalised to [0, 1] by the region extent (clamped).
  Point normalized_position(VehicleIdx m, std::int64_t slot) const;

  friend bool operator==(const Fleet& a, const Fleet& b);

 private:
  std::vector<VehicleState> vehicles_;
  MobilityParams params_;
};

enum class PdfMode { normalized, literal };

/// Truncated-Gaussian speed density. `literal` evaluates the printed formula
/// that uses Phi(x) = erf(x)/sqrt(2) in the denominator and integrates to
/// sqrt(2); `normalized` is the proper density. Zero outside [g_min, g_max].
double truncated_gaussian_pdf(double g, const MobilityParams& p, PdfMode mode = PdfMode::normalized);
double truncated_gaussian_cdf(double g, const MobilityParams& p);
double truncated_gaussian_mean(const MobilityParams& p);

template <class Urbg>
double sample_truncated_gaussian(Urbg& rng, const MobilityParams& p);

/// Synthetic fleet: the owner (index 0) is present over the whole horizon;
/// every other vehicle arrives at U[arrival_min, arrival_max], appears at a
/// uniform point of the RSU disk and drives straight at a truncated-Gaussian
/// speed in a uniform heading until it leaves the disk. Each vehicle draws from
/// its own seed stream, so the first k vehicles of an n-vehicle fleet equal a
/// k-vehicle fleet built with the same seed.
Fleet build_fleet(std::size_t n_vehicles, std::uint64_t seed, const MobilityParams& p = {},
                  const CapabilityRange& f_range = {});

struct TraceOptions {
  /// Pins the lowest trace id (the owner) to [0, +inf).
  bool pin_owner = true;
  std::uint64_t capability_seed = 1;
  CapabilityRange f_range;
};

/// Reads `time_s,vehicle_id,x_m,y_m,speed_mps` rows. Missing slots are
/// linearly interpolated; AT/DT are the first/last sample times inside the
/// coverage disk. Throws std::runtime_error with the line number on malformed
/// rows, and when the trace holds no vehicles.
Fleet ingest_trace(const std::filesystem::path& path, const MobilityParams& p = {},
                   const TraceOptions& options = {});
void write_trace(const Fleet& fleet, const std::filesystem::path& path);

/// Euclidean distance at slot t. Throws std::out_of_range when either vehicle
/// is outside its dwell window at t.
double distance(const Fleet& fleet, VehicleIdx m, VehicleIdx n, std::int64_t t);

/// Distance with positions held outside the recorded tracks; used where a
/// model needs geometry for vehicles that are not (yet) in the cloud.
double held_distance(const Fleet& fleet, VehicleIdx m, VehicleIdx n, std::int64_t t);

nlohmann::json to_json(const Fleet& fleet);
Fleet fleet_from_json(const nlohmann::json& doc);
Fleet load_fleet(const std::filesystem::path& path);
void save_fleet(const Fleet& fleet, const std::filesystem::path& path);

// ---------------------------------------------------------------------------

template <class Urbg>
double sample_truncated_gaussian(Urbg& rng, const MobilityParams& p) {
  std::normal_distribution<double> normal(p.mu_g, p.sigma_g);
  for (;;) {
    const double g = normal(rng);
    if (g >= p.g_min && g <= p.g_max) return g;
  }
}

}  // namespace vcsched::mobility
