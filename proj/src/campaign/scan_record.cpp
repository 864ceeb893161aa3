#include "quicaudit/campaign/scan_record.hpp"

#include "quicaudit/error.hpp"

namespace quicaudit::campaign {

void validate(const ScanRecord& r) {
  if (r.rank < 1) throw ConfigError("rank must be at least 1");
  if (r.quic_attempted && r.quic.has_value() == r.error.has_value())
    throw ConfigError("attempted probe of " + r.domain + " needs exactly one of class or error");
  if (!r.quic_attempted && r.quic) throw ConfigError("class recorded without a probe");
}

void attach_trace(ScanRecord& r, const handshake::HandshakeTrace& trace,
                  const handshake::LimitPolicy& policy) {
  r.quic_attempted = true;
  r.probe_outcome = trace.outcome;
  r.quic.reset();
  r.error.reset();
  try {
    r.quic = handshake::classify_handshake(trace, policy);
  } catch (const NotClassifiableError&) {
    r.error = std::string(handshake::to_string(trace.outcome));
  } catch (const Error& e) {
    r.error = e.what();
  }
}

}  // namespace quicaudit::campaign
