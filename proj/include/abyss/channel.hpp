#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace abyss::channel {

/// Erasure-channel model of an acoustic modem link. Packets are lost whole
/// and retransmitted; delivered content is never corrupted.
struct LinkConfig {
  double rate_bps = 50'000.0;
  double latency_s = 0.0;  // one way
  std::size_t packet_size = 256;
  std::size_t per_packet_overhead = 16;
  double packet_loss_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t packet_payload() const noexcept { return packet_size - per_packet_overhead; }
};

struct TransmissionReport {
  std::size_t payload_bytes = 0;
  std::size_t packets_sent = 0;                     // distinct packets
  std::size_t packets_lost_then_retransmitted = 0;  // lost attempts
  double total_time_s = 0.0;
  bool delivered = false;

  /// `key<TAB>value` lines.
  std::string to_text() const;
};

struct Transmission {
  std::vector<std::uint8_t> bytes;
  TransmissionReport report;
};

/// Stop-and-wait delivery of `payload`. Every attempt costs its airtime; a
/// lost attempt additionally costs a round trip (2 x latency) before the
/// sender retries. Arrival of the final packet adds one one-way latency.
/// With no loss and no overhead this is exactly latency + 8 * bytes / rate.
Transmission transmit(std::span<const std::uint8_t> payload, const LinkConfig& link);

/// Loss-free upper bound on images per second for a payload of the given size.
double max_fps(const LinkConfig& link, std::size_t payload_bytes);

std::size_t packet_count(const LinkConfig& link, std::size_t payload_bytes);

}  // namespace abyss::channel
