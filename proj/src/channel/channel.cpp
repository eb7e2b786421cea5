#include "abyss/channel.hpp"

#include <charconv>
#include <random>
#include <sstream>
#include <string_view>

#include "abyss/error.hpp"

namespace abyss::channel {

void LinkConfig::validate() const {
  if (!(rate_bps > 0.0)) throw InvalidArgument("link rate must be positive");
  if (latency_s < 0.0) throw InvalidArgument("link latency must be non-negative");
  if (packet_size <= per_packet_overhead) throw InvalidArgument("packet size must exceed per-packet overhead");
  if (!(packet_loss_prob >= 0.0 && packet_loss_prob < 1.0))
    throw InvalidArgument("packet loss probability must be in [0, 1)");
}

std::size_t packet_count(const LinkConfig& link, std::size_t payload_bytes) {
  link.validate();
  const std::size_t chunk = link.packet_payload();
  return (payload_bytes + chunk - 1) / chunk;
}

Transmission transmit(std::span<const std::uint8_t> payload, const LinkConfig& link) {
  link.validate();
  if (payload.empty()) throw InvalidArgument("transmit: empty payload");

  const std::size_t chunk = link.packet_payload();
  const std::size_t packets = packet_count(link, payload.size());

  std::mt19937_64 rng(link.seed);
  std::bernoulli_distribution lost(link.packet_loss_prob);

  Transmission t;
  t.bytes.reserve(payload.size());
  std::size_t airtime_bytes = 0;  // every attempt, header included
  std::size_t lost_attempts = 0;
  for (std::size_t p = 0; p < packets; ++p) {
    const std::size_t begin = p * chunk;
    const std::size_t len = std::min(chunk, payload.size() - begin);
    for (;;) {
      airtime_bytes += len + link.per_packet_overhead;
      if (link.packet_loss_prob > 0.0 && lost(rng)) {
        ++lost_attempts;
        continue;
      }
      break;
    }
    t.bytes.insert(t.bytes.end(), payload.begin() + static_cast<std::ptrdiff_t>(begin),
                   payload.begin() + static_cast<std::ptrdiff_t>(begin + len));
  }

  t.report.payload_bytes = payload.size();
  t.report.packets_sent = packets;
  t.report.packets_lost_then_retransmitted = lost_attempts;
  t.report.delivered = t.bytes.size() == payload.size();
  t.report.total_time_s = link.latency_s + 8.0 * static_cast<double>(airtime_bytes) / link.rate_bps +
                          static_cast<double>(lost_attempts) * 2.0 * link.latency_s;
  return t;
}

double max_fps(const LinkConfig& link, std::size_t payload_bytes) {
  if (payload_bytes == 0) throw InvalidArgument("max_fps: payload must be non-empty");
  const std::size_t gross = payload_bytes + packet_count(link, payload_bytes) * link.per_packet_overhead;
  return link.rate_bps / (8.0 * static_cast<double>(gross));
}

std::string TransmissionReport::to_text() const {
  char t[32];
  const auto end = std::to_chars(t, t + sizeof t, total_time_s).ptr;
  std::ostringstream os;
  os << "payload_bytes\t" << payload_bytes << '\n'
     << "packets_sent\t" << packets_sent << '\n'
     << "packets_lost_then_retransmitted\t" << packets_lost_then_retransmitted << '\n'
     << "total_time_s\t" << std::string_view(t, end) << '\n'
     << "delivered\t" << (delivered ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace abyss::channel
