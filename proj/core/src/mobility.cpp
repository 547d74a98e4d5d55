#include "vcsched/mobility.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vcsched/rng.hpp"

namespace vcsched::mobility {

void MobilityParams::check() const {
  if (!(g_min < g_max)) throw std::invalid_argument("mobility: g_min must be below g_max");
  if (!(coverage_d > 0.0)) throw std::invalid_argument("mobility: coverage diameter must be positive");
  if (!(slot_length > 0.0)) throw std::invalid_argument("mobility: slot length must be positive");
  if (!(sigma_g > 0.0)) throw std::invalid_argument("mobility: sigma_g must be positive");
  if (!(region.width() > 0.0 && region.height() > 0.0)) throw std::invalid_argument("mobility: empty region");
}

Point VehicleState::position(std::int64_t slot) const {
  if (track.empty()) throw std::logic_error("vehicle " + std::to_string(id) + " has no track");
  const auto offset = std::clamp<std::int64_t>(slot - first_slot, 0, static_cast<std::int64_t>(track.size()) - 1);
  return track[static_cast<std::size_t>(offset)];
}

Fleet::Fleet(std::vector<VehicleState> vehicles, MobilityParams params)
    : vehicles_(std::move(vehicles)), params_(params) {}

double Fleet::max_capability() const {
  double best = 0.0;
  for (const auto& v : vehicles_) best = std::max(best, v.capability_f);
  return best;
}

Point Fleet::normalized_position(VehicleIdx m, std::int64_t slot) const {
  const auto p = vehicle(m).position(slot);
  const auto& r = params_.region;
  return {std::clamp((p.x - r.x_min) / r.width(), 0.0, 1.0), std::clamp((p.y - r.y_min) / r.height(), 0.0, 1.0)};
}

bool operator==(const Fleet& a, const Fleet& b) { return a.vehicles_ == b.vehicles_; }

namespace {

double normal_pdf(double g, double mu, double sigma) {
  const double z = (g - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double standard_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double truncation_mass(const MobilityParams& p) {
  return standard_cdf((p.g_max - p.mu_g) / p.sigma_g) - standard_cdf((p.g_min - p.mu_g) / p.sigma_g);
}

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double truncated_gaussian_pdf(double g, const MobilityParams& p, PdfMode mode) {
  if (g < p.g_min || g > p.g_max) return 0.0;
  const double f = normal_pdf(g, p.mu_g, p.sigma_g);
  if (mode == PdfMode::literal) {
    // Phi(x) = 2/sqrt(2 pi) * int_0^x exp(-t^2) dt = erf(x) / sqrt(2).
    auto phi = [](double x) { return std::erf(x) / std::numbers::sqrt2; };
    const double s = p.sigma_g * std::numbers::sqrt2;
    return 2.0 * f / (phi((p.g_max - p.mu_g) / s) - phi((p.g_min - p.mu_g) / s));
  }
  return f / truncation_mass(p);
}

double truncated_gaussian_cdf(double g, const MobilityParams& p) {
  if (g <= p.g_min) return 0.0;
  if (g >= p.g_max) return 1.0;
  return (standard_cdf((g - p.mu_g) / p.sigma_g) - standard_cdf((p.g_min - p.mu_g) / p.sigma_g)) /
         truncation_mass(p);
}

double truncated_gaussian_mean(const MobilityParams& p) {
  const double a = (p.g_min - p.mu_g) / p.sigma_g;
  const double b = (p.g_max - p.mu_g) / p.sigma_g;
  const double phi_a = normal_pdf(a, 0.0, 1.0);
  const double phi_b = normal_pdf(b, 0.0, 1.0);
  return p.mu_g + p.sigma_g * (phi_a - phi_b) / truncation_mass(p);
}

Fleet build_fleet(std::size_t n_vehicles, std::uint64_t seed, const MobilityParams& p,
                  const CapabilityRange& f_range) {
  p.check();
  if (n_vehicles == 0) throw std::invalid_argument("a fleet needs at least the task owner");
  const Point center = p.region.center();
  const double radius = p.coverage_d / 2.0;
  auto inside = [&](Point q) { return dist(q, center) <= radius; };

  std::vector<VehicleState> vehicles;
  vehicles.reserve(n_vehicles);
  for (VehicleIdx m = 0; m < n_vehicles; ++m) {
    auto rng = make_rng({seed, 0xf1ee7, m});
    VehicleState v;
    v.id = m + 1;
    v.capability_f = uniform(rng, f_range.min_ghz, f_range.max_ghz);
    v.speed_g = sample_truncated_gaussian(rng, p);
    v.arrival_at = m == kOwner ? 0.0 : uniform(rng, p.arrival_min, p.arrival_max);
    const double r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
    const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Point start{center.x + r * std::cos(theta), center.y + r * std::sin(theta)};
    auto at_time = [&](double t) {
      const double s = v.speed_g * (t - v.arrival_at);
      return Point{start.x + s * std::cos(heading), start.y + s * std::sin(heading)};
    };

    v.first_slot = static_cast<std::int64_t>(std::ceil(v.arrival_at / p.slot_length));
    for (std::int64_t t = v.first_slot; t <= v.first_slot + p.horizon_slots; ++t) {
      const Point q = at_time(static_cast<double>(t) * p.slot_length);
      if (!inside(q)) break;
      v.track.push_back(q);
    }
    if (m == kOwner) {
      if (v.track.empty()) v.track.push_back(start);
      v.departure_dt = kForever;
    } else if (v.track.empty()) {
      // Leaves the disk before the first whole slot.
      v.track.push_back(start);
      v.departure_dt = v.arrival_at;
    } else {
      v.departure_dt = static_cast<double>(v.last_slot()) * p.slot_length;
    }
    vehicles.push_back(std::move(v));
  }
  return Fleet(std::move(vehicles), p);
}

namespace {

struct TraceSample {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
};

double parse_double(std::string_view field, std::size_t line_no, const char* what) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw std::runtime_error("trace line " + std::to_string(line_no) + ": bad " + what + " '" +
                             std::string(field) + "'");
  }
  return value;
}

}  // namespace

Fleet ingest_trace(const std::filesystem::path& path, const MobilityParams& p, const TraceOptions& options) {
  p.check();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path.string());

  std::map<std::int64_t, std::map<std::int64_t, TraceSample>> samples;  // vehicle -> slot -> sample
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("time_s", 0) == 0) continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 5) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": expected 5 fields, got " +
                               std::to_string(fields.size()));
    }
    const double time = parse_double(fields[0], line_no, "time_s");
    const double id = parse_double(fields[1], line_no, "vehicle_id");
    if (id != std::floor(id)) throw std::runtime_error("trace line " + std::to_string(line_no) + ": non-integer vehicle_id");
    const TraceSample sample{parse_double(fields[2], line_no, "x_m"), parse_double(fields[3], line_no, "y_m"),
                             parse_double(fields[4], line_no, "speed_mps")};
    const auto slot = static_cast<std::int64_t>(std::llround(time / p.slot_length));
    if (!samples[static_cast<std::int64_t>(id)].emplace(slot, sample).second) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": duplicate sample for vehicle " +
                               std::to_string(static_cast<std::int64_t>(id)) + " at slot " + std::to_string(slot));
    }
  }
  if (samples.empty()) throw std::runtime_error("trace " + path.string() + " holds no vehicles (no task owner)");

  const Point center = p.region.center();
  const double radius = p.coverage_d / 2.0;
  std::vector<VehicleState> vehicles;
  for (const auto& [source_id, rows] : samples) {
    const bool is_owner = vehicles.empty();
    VehicleState v;
    v.id = vehicles.size() + 1;
    v.source_id = source_id;
    v.first_slot = rows.begin()->first;
    double speed_sum = 0.0;
    bool constant_speed = true;
    auto prev = rows.begin();
    for (auto it = rows.begin(); it != rows.end(); ++it) {
      speed_sum += it->second.speed;
      constant_speed = constant_speed && it->second.speed == rows.begin()->second.speed;
      if (it != rows.begin()) {
        const double span = static_cast<double>(it->first - prev->first);
        for (std::int64_t s = prev->first + 1; s < it->first; ++s) {
          const double w = static_cast<double>(s - prev->first) / span;
          v.track.push_back({prev->second.x + w * (it->second.x - prev->second.x),
                             prev->second.y + w * (it->second.y - prev->second.y)});
        }
      }
      v.track.push_back({it->second.x, it->second.y});
      prev = it;
    }
    v.speed_g = constant_speed ? rows.begin()->second.speed : speed_sum / static_cast<double>(rows.size());

    std::int64_t first_in = 0;
    std::int64_t last_in = -1;
    bool any_in = false;
    for (std::size_t k = 0; k < v.track.size(); ++k) {
      if (dist(v.track[k], center) <= radius) {
        const auto s = v.first_slot + static_cast<std::int64_t>(k);
        if (!any_in) first_in = s;
        last_in = s;
        any_in = true;
      }
    }
    if (is_owner && options.pin_owner) {
      v.arrival_at = 0.0;
      v.departure_dt = kForever;
    } else if (any_in) {
      v.arrival_at = static_cast<double>(first_in) * p.slot_length;
      v.departure_dt = static_cast<double>(last_in) * p.slot_length;
    } else {
      continue;  // never inside the coverage disk
    }
    auto rng = make_rng({options.capability_seed, 0xca9a, static_cast<std::uint64_t>(source_id)});
    v.capability_f = uniform(rng, options.f_range.min_ghz, options.f_range.max_ghz);
    vehicles.push_back(std::move(v));
  }
  if (vehicles.empty()) throw std::runtime_error("trace " + path.string() + " has no vehicle inside the coverage disk");
  return Fleet(std::move(vehicles), p);
}

void write_trace(const Fleet& fleet, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file " + path.string());
  struct Row {
    std::int64_t slot;
    std::int64_t id;
    Point at;
    double speed;
  };
  std::vector<Row> rows;
  for (const auto& v : fleet.vehicles()) {
    const auto id = v.source_id != 0 ? v.source_id : static_cast<std::int64_t>(v.id);
    for (std::size_t k = 0; k < v.track.size(); ++k) {
      rows.push_back({v.first_slot + static_cast<std::int64_t>(k), id, v.track[k], v.speed_g});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::pair(a.slot, a.id) < std::pair(b.slot, b.id);
  });
  auto num = [](double x) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
  };
  out << "time_s,vehicle_id,x_m,y_m,speed_mps\n";
  for (const auto& r : rows) {
    out << num(static_cast<double>(r.slot) * fleet.params().slot_length) << ',' << r.id << ',' << num(r.at.x)
        << ',' << num(r.at.y) << ',' << num(r.speed) << '\n';
  }
}

double distance(const Fleet& fleet, VehicleIdx m, VehicleIdx n, std::int64_t t) {
  const double time = static_cast<double>(t) * fleet.params().slot_length;
  for (const auto idx : {m, n}) {
    if (!fleet.vehicle(idx).present_at(time)) {
      throw std::out_of_range("vehicle " + std::to_string(idx + 1) + " is not in the cloud at slot " +
                              std::to_string(t));
    }
  }
  return held_distance(fleet, m, n, t);
}

double held_distance(const Fleet& fleet, VehicleIdx m, VehicleIdx n, std::int64_t t) {
  if (m == n) return 0.0;
  return dist(fleet.vehicle(m).position(t), fleet.vehicle(n).position(t));
}

nlohmann::json to_json(const Fleet& fleet) {
  const auto& p = fleet.params();
  nlohmann::json doc;
  doc["params"] = {{"mu_g", p.mu_g},
                   {"sigma_g", p.sigma_g},
                   {"g_min", p.g_min},
                   {"g_max", p.g_max},
                   {"coverage_d", p.coverage_d},
                   {"slot_length", p.slot_length},
                   {"region", {p.region.x_min, p.region.y_min, p.region.x_max, p.region.y_max}},
                   {"arrival_min", p.arrival_min},
                   {"arrival_max", p.arrival_max},
                   {"horizon_slots", p.horizon_slots}};
  doc["vehicles"] = nlohmann::json::array();
  for (const auto& v : fleet.vehicles()) {
    nlohmann::json track = nlohmann::json::array();
    for (const auto& q : v.track) track.push_back({q.x, q.y});
    doc["vehicles"].push_back({{"id", v.id},
                               {"source_id", v.source_id},
                               {"speed_mps", v.speed_g},
                               {"capability_ghz", v.capability_f},
                               {"arrival_s", v.arrival_at},
                               {"departure_s", std::isinf(v.departure_dt) ? nlohmann::json(nullptr)
                                                                         : nlohmann::json(v.departure_dt)},
                               {"first_slot", v.first_slot},
                               {"track", std::move(track)}});
  }
  return doc;
}

Fleet fleet_from_json(const nlohmann::json& doc) {
  MobilityParams p;
  if (doc.contains("params")) {
    const auto& j = doc["params"];
    p.mu_g = j.value("mu_g", p.mu_g);
    p.sigma_g = j.value("sigma_g", p.sigma_g);
    p.g_min = j.value("g_min", p.g_min);
    p.g_max = j.value("g_max", p.g_max);
    p.coverage_d = j.value("coverage_d", p.coverage_d);
    p.slot_length = j.value("slot_length", p.slot_length);
    if (j.contains("region")) {
      const auto r = j["region"].get<std::vector<double>>();
      if (r.size() != 4) throw std::invalid_argument("fleet: region needs 4 numbers");
      p.region = {r[0], r[1], r[2], r[3]};
    }
    p.arrival_min = j.value("arrival_min", p.arrival_min);
    p.arrival_max = j.value("arrival_max", p.arrival_max);
    p.horizon_slots = j.value("horizon_slots", p.horizon_slots);
  }
  p.check();
  std::vector<VehicleState> vehicles;
  for (const auto& j : doc.at("vehicles")) {
    VehicleState v;
    v.id = j.at("id").get<std::size_t>();
    v.source_id = j.value("source_id", std::int64_t{0});
    v.speed_g = j.at("speed_mps").get<double>();
    v.capability_f = j.at("capability_ghz").get<double>();
    v.arrival_at = j.at("arrival_s").get<double>();
    v.departure_dt = j.at("departure_s").is_null() ? kForever : j.at("departure_s").get<double>();
    v.first_slot = j.at("first_slot").get<std::int64_t>();
    for (const auto& q : j.at("track")) v.track.push_back({q.at(0).get<double>(), q.at(1).get<double>()});
    if (v.id != vehicles.size() + 1) throw std::invalid_argument("fleet: vehicle ids must be 1..n in order");
    if (!(v.capability_f > 0.0)) throw std::invalid_argument("fleet: capability must be positive");
    if (v.arrival_at > v.departure_dt) throw std::invalid_argument("fleet: arrival after departure");
    if (v.track.empty()) throw std::invalid_argument("fleet: empty track");
    vehicles.push_back(std::move(v));
  }
  if (vehicles.empty()) throw std::invalid_argument("fleet: no vehicles");
  return Fleet(std::move(vehicles), p);
}

Fleet load_fleet(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return ingest_trace(path);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fleet file " + path.string());
  return fleet_from_json(nlohmann::json::parse(in));
}

void save_fleet(const Fleet& fleet, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write fleet file " + path.string());
  out << to_json(fleet).dump(2) << '\n';
}

}  // namespace vcsched::mobility
