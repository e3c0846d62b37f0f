#pragma once

#include "tlt/device.hpp"
#include "tlt/transport.hpp"
#include "tlt/verifier.hpp"

namespace tlt {

// Runs advertise -> scan -> challenge -> respond -> verify across `channel`.
// Transport faults surface as ParseError / MissingFragment / InconsistentSet;
// a device that refuses to attest surfaces as NotOperational.
TrustVerdict run_attestation(const Device& device, Verifier& verifier, transport::Channel& channel,
                             RandomSource& device_rng = system_random());

}  // namespace tlt
