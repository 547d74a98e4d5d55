#include "vcsched/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vcsched::channel {

void ChannelParams::check() const {
  if (!(fc_ghz > 0.0)) throw std::invalid_argument("channel: fc_ghz must be positive");
  if (sigma_delta_db < 0.0 || sigma_beta_db < 0.0) throw std::invalid_argument("channel: negative sigma");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double mean_beta_db(double d) { return 5.0 + std::max(0.0, 15.0 * std::log10(d) - 41.0); }

double path_loss(double d, const ChannelParams& p, const LinkKey& key) {
  if (!(d > 0.0)) throw std::domain_error("path loss needs a positive distance");
  const double los = 32.4 + 20.0 * std::log10(d) + 20.0 * std::log10(p.fc_ghz);
  const double mu_beta = mean_beta_db(d);
  if (p.mode == ChannelMode::deterministic) return los + mu_beta;

  std::uint64_t state = p.seed ^ 0xc4a7'5eedULL;
  for (const auto word : {static_cast<std::uint64_t>(std::min(key.m, key.n)),
                          static_cast<std::uint64_t>(std::max(key.m, key.n)), static_cast<std::uint64_t>(key.slot)}) {
    state = splitmix64(state ^ word);
  }
  // Box-Muller on two hashed uniforms in (0, 1].
  auto unit = [&state] {
    state = splitmix64(state);
    return (static_cast<double>(state >> 11) + 1.0) * 0x1.0p-53;
  };
  const double radius = std::sqrt(-2.0 * std::log(unit()));
  const double angle = 2.0 * std::numbers::pi * unit();
  const double z_delta = radius * std::cos(angle);
  const double z_beta = radius * std::sin(angle);
  return los + p.sigma_delta_db * z_delta + mu_beta + p.sigma_beta_db * z_beta;
}

double psi(double path_loss_db, const ChannelParams& p) { return p.psi_a * path_loss_db + p.psi_b; }

double link_time(double c_mb, mobility::VehicleIdx m, mobility::VehicleIdx n, std::int64_t slot,
                 const mobility::Fleet& fleet, const ChannelParams& p) {
  if (m == n || c_mb == 0.0) return 0.0;
  const double d = std::max(1.0, mobility::held_distance(fleet, m, n, slot));
  return c_mb * psi(path_loss(d, p, {m, n, slot}), p);
}

double transmission_time(double c_mb, mobility::VehicleIdx m, mobility::VehicleIdx n, std::int64_t slot,
                         const mobility::Fleet& fleet, const ChannelParams& p) {
  if (m == n) return 0.0;
  const double d = mobility::distance(fleet, m, n, slot);
  if (c_mb == 0.0) return 0.0;
  return c_mb * psi(path_loss(d, p, {m, n, slot}), p);
}

}  // namespace vcsched::channel
