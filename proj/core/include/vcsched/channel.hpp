#pragma once

#include <cstdint>

#include "vcsched/mobility.hpp"

namespace vcsched::channel {

enum class ChannelMode { deterministic, stochastic };

/// V2V link parameters. Psi maps path loss (dB) to seconds per megabyte:
/// psi(PL) = psi_a * PL + psi_b.
struct ChannelParams {
  double fc_ghz = 5.9;
  double sigma_delta_db = 3.0;
  double sigma_beta_db = 4.5;
  double psi_a = 0.15;
  double psi_b = 0.001;
  ChannelMode mode = ChannelMode::deterministic;
  std::uint64_t seed = 0;

  void check() const;
};

/// Identifies one (unordered vehicle pair, slot) draw in stochastic mode.
struct LinkKey {
  mobility::VehicleIdx m = 0;
  mobility::VehicleIdx n = 0;
  std::int64_t slot = 0;
};

/// Mean of the extra attenuation beta: 5 + max(0, 15 log10(d) - 41) dB.
double mean_beta_db(double d);

/// Path loss in dB at distance d > 0 (throws std::domain_error otherwise).
/// Deterministic mode uses delta = 0 and beta = its mean; stochastic mode draws
/// both from Gaussians (in dB) seeded by (min(m,n), max(m,n), slot, seed).
double path_loss(double d, const ChannelParams& p, const LinkKey& key = {});

double psi(double path_loss_db, const ChannelParams& p);

/// Seconds to move `c_mb` megabytes from vehicle m to vehicle n at `slot`.
/// Zero for m == n. Throws std::out_of_range when either vehicle is outside
/// its dwell window.
double transmission_time(double c_mb, mobility::VehicleIdx m, mobility::VehicleIdx n, std::int64_t slot,
                         const mobility::Fleet& fleet, const ChannelParams& p);

/// Same model evaluated on held positions, so it is defined for vehicles that
/// have not arrived or already left. Distances are floored at 1 m.
double link_time(double c_mb, mobility::VehicleIdx m, mobility::VehicleIdx n, std::int64_t slot,
                 const mobility::Fleet& fleet, const ChannelParams& p);

}  // namespace vcsched::channel
