// caster.hpp : correction message framing (preamble, length, payload, CRC-24Q)
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rtkbench/geo.hpp"
#include "rtkbench/gnss_time.hpp"
#include "rtkbench/obs.hpp"

namespace rtkbench {

constexpr std::uint8_t kFramePreamble = 0xC5;
constexpr std::size_t kMaxPayload = 1023;

// CRC-24Q, polynomial 0x1864CFB, init 0
std::uint32_t crc24q(const std::uint8_t* data, std::size_t len);
inline std::uint32_t crc24q(const std::vector<std::uint8_t>& v) { return crc24q(v.data(), v.size()); }

enum class MessageType : std::uint8_t { StationInfo = 1, Observations = 2 };

// One wire unit: either the declared station position (type 1) or the raw
// observation set (type 2). Field resolutions match the encoding exactly
// (0.1 mm, 1e-3 cycles, 0.25 dB-Hz, 1 s lock time, 1 ms tow).
struct CorrectionMessage {
    MessageType type = MessageType::Observations;
    std::uint16_t station_id = 0;
    std::uint16_t gps_week = 0;
    std::uint32_t tow_ms = 0;
    EcefPosition position{};        // type 1
    std::vector<Observation> obs{}; // type 2

    GnssTime time() const { return {static_cast<int>(gps_week), tow_ms / 1000.0}; }
};

// Wire layout (all multi-byte fields big-endian):
//   0xC5 | len u16 | payload | crc24 (3 bytes, over preamble..payload)
// payload: msg_type u8, station_id u16, gps_week u16, tow_ms u32, then
//   type 1: x, y, z as signed 64-bit in 0.1 mm units
//   type 2: obs_count u8, per obs: system u8, prn u8, band u8,
//           pseudorange s64 (0.1 mm), carrier s64 (1e-3 cycles),
//           cn0 u8 (0.25 dB-Hz), lock_time u16 (s)
// Throws RangeError when a field exceeds its encoding range.
std::vector<std::uint8_t> encode_frame(const CorrectionMessage& msg);

enum class DecodeStatus : std::uint8_t { Ok, Truncated, CrcMismatch, UnknownType };

struct DecodeResult {
    DecodeStatus status = DecodeStatus::Truncated;
    std::optional<CorrectionMessage> message;
    std::size_t consumed = 0;   // bytes consumed from the input
    std::size_t frame_size = 0; // size of the parsed frame (tail of consumed)
};

// Decodes one frame from the start of the buffer. Garbage before the first
// preamble byte is skipped (counted in consumed).
DecodeResult decode_frame(const std::uint8_t* data, std::size_t len);
DecodeResult decode_frame(const std::vector<std::uint8_t>& buf);

// Incremental stream parser: feed arbitrary byte chunks, collect decoded
// messages; resynchronizes on the next preamble after a CRC failure.
class FrameParser {
public:
    struct Event {
        DecodeStatus status;
        std::optional<CorrectionMessage> message;
        std::vector<std::uint8_t> raw; // the frame bytes (Ok events only)
    };

    std::vector<Event> push(const std::uint8_t* data, std::size_t len);
    std::vector<Event> push(const std::vector<std::uint8_t>& chunk) {
        return push(chunk.data(), chunk.size());
    }

private:
    std::vector<std::uint8_t> buf_;
};

// Quantize an observation to the wire grid (what a decode of its encoding
// would return); used to build messages that round-trip exactly.
Observation quantize_to_wire(const Observation& o);

} // namespace rtkbench
