// caster.cpp : frame encoding/decoding with CRC-24Q
#include "rtkbench/caster.hpp"

#include <cmath>
#include <cstring>

#include "rtkbench/errors.hpp"

namespace rtkbench {

namespace {

constexpr std::uint32_t kCrcPoly = 0x1864CFB;

struct CrcTable {
    std::uint32_t t[256];
    CrcTable() {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t crc = i << 16;
            for (int j = 0; j < 8; ++j) {
                crc <<= 1;
                if (crc & 0x1000000) crc ^= kCrcPoly;
            }
            t[i] = crc & 0xFFFFFF;
        }
    }
};

const CrcTable kCrcTable;

void put_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    for (int i = 3; i >= 0; --i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

void put_s64(std::vector<std::uint8_t>& v, std::int64_t x) {
    auto u = static_cast<std::uint64_t>(x);
    for (int i = 7; i >= 0; --i) v.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

std::int64_t get_s64(const std::uint8_t* p) {
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u = (u << 8) | p[i];
    return static_cast<std::int64_t>(u);
}

std::int64_t scale_checked(double value, double unit, const char* what) {
    const double scaled = value / unit;
    if (!std::isfinite(scaled) || std::fabs(scaled) > 9.1e18) {
        throw RangeError(std::string("encode_frame: ") + what + " out of range");
    }
    return static_cast<std::int64_t>(std::llround(scaled));
}

} // namespace

std::uint32_t crc24q(const std::uint8_t* data, std::size_t len) {
    std::uint32_t crc = 0;
    for (std::size_t i = 0; i < len; ++i) {
        crc = ((crc << 8) & 0xFFFFFF) ^ kCrcTable.t[((crc >> 16) ^ data[i]) & 0xFF];
    }
    return crc;
}

std::vector<std::uint8_t> encode_frame(const CorrectionMessage& msg) {
    std::vector<std::uint8_t> payload;
    payload.push_back(static_cast<std::uint8_t>(msg.type));
    put_u16(payload, msg.station_id);
    put_u16(payload, msg.gps_week);
    put_u32(payload, msg.tow_ms);

    if (msg.type == MessageType::StationInfo) {
        put_s64(payload, scale_checked(msg.position.x, 1e-4, "position.x"));
        put_s64(payload, scale_checked(msg.position.y, 1e-4, "position.y"));
        put_s64(payload, scale_checked(msg.position.z, 1e-4, "position.z"));
    } else if (msg.type == MessageType::Observations) {
        if (msg.obs.size() > 255) throw RangeError("encode_frame: more than 255 observations");
        payload.push_back(static_cast<std::uint8_t>(msg.obs.size()));
        for (const Observation& o : msg.obs) {
            if (o.sat.prn < 1 || o.sat.prn > 64) throw RangeError("encode_frame: prn out of range");
            const double cn0q = std::nearbyint(o.cn0_dbhz * 4.0);
            if (cn0q < 0 || cn0q > 255) throw RangeError("encode_frame: cn0 out of range");
            const double lock = std::nearbyint(o.lock_time_s);
            if (lock < 0 || lock > 65535) throw RangeError("encode_frame: lock time out of range");
            payload.push_back(static_cast<std::uint8_t>(o.sat.system));
            payload.push_back(static_cast<std::uint8_t>(o.sat.prn));
            payload.push_back(static_cast<std::uint8_t>(o.band));
            put_s64(payload, scale_checked(o.pseudorange_m, 1e-4, "pseudorange"));
            put_s64(payload, scale_checked(o.carrier_cycles, 1e-3, "carrier"));
            payload.push_back(static_cast<std::uint8_t>(cn0q));
            put_u16(payload, static_cast<std::uint16_t>(lock));
        }
    } else {
        throw RangeError("encode_frame: unknown message type");
    }

    if (payload.size() > kMaxPayload) throw RangeError("encode_frame: payload exceeds 1023 bytes");

    std::vector<std::uint8_t> frame;
    frame.reserve(payload.size() + 6);
    frame.push_back(kFramePreamble);
    put_u16(frame, static_cast<std::uint16_t>(payload.size()));
    frame.insert(frame.end(), payload.begin(), payload.end());
    const std::uint32_t crc = crc24q(frame.data(), frame.size());
    frame.push_back(static_cast<std::uint8_t>(crc >> 16));
    frame.push_back(static_cast<std::uint8_t>(crc >> 8));
    frame.push_back(static_cast<std::uint8_t>(crc));
    return frame;
}

DecodeResult decode_frame(const std::uint8_t* data, std::size_t len) {
    DecodeResult res;
    std::size_t start = 0;
    while (start < len && data[start] != kFramePreamble) ++start;
    if (start >= len) {
        res.consumed = start;
        res.status = DecodeStatus::Truncated;
        return res;
    }
    if (len - start < 3) {
        res.consumed = start;
        res.status = DecodeStatus::Truncated;
        return res;
    }
    const std::size_t plen = get_u16(data + start + 1);
    if (plen > kMaxPayload) {
        // implausible header; skip this preamble byte and let the caller resync
        res.consumed = start + 1;
        res.status = DecodeStatus::CrcMismatch;
        return res;
    }
    const std::size_t total = 3 + plen + 3;
    if (len - start < total) {
        res.consumed = start;
        res.status = DecodeStatus::Truncated;
        return res;
    }
    const std::uint8_t* f = data + start;
    const std::uint32_t want = (std::uint32_t(f[3 + plen]) << 16) |
                               (std::uint32_t(f[4 + plen]) << 8) | std::uint32_t(f[5 + plen]);
    if (crc24q(f, 3 + plen) != want) {
        res.consumed = start + 1; // resync from the byte after the bad preamble
        res.status = DecodeStatus::CrcMismatch;
        return res;
    }

    const std::uint8_t* p = f + 3;
    CorrectionMessage msg;
    res.consumed = start + total;
    res.frame_size = total;
    if (plen < 9) {
        res.status = DecodeStatus::UnknownType;
        return res;
    }
    const std::uint8_t type = p[0];
    msg.station_id = get_u16(p + 1);
    msg.gps_week = get_u16(p + 3);
    msg.tow_ms = get_u32(p + 5);

    if (type == 1) {
        if (plen != 9 + 24) {
            res.status = DecodeStatus::UnknownType;
            return res;
        }
        msg.type = MessageType::StationInfo;
        msg.position.x = static_cast<double>(get_s64(p + 9)) * 1e-4;
        msg.position.y = static_cast<double>(get_s64(p + 17)) * 1e-4;
        msg.position.z = static_cast<double>(get_s64(p + 25)) * 1e-4;
    } else if (type == 2) {
        if (plen < 10) {
            res.status = DecodeStatus::UnknownType;
            return res;
        }
        const std::size_t n = p[9];
        if (plen != 10 + n * 22) {
            res.status = DecodeStatus::UnknownType;
            return res;
        }
        msg.type = MessageType::Observations;
        msg.obs.reserve(n);
        const GnssTime t{static_cast<int>(msg.gps_week), msg.tow_ms / 1000.0};
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t* q = p + 10 + i * 22;
            if (q[0] > 1 || q[2] > 1 || q[1] < 1 || q[1] > 64) {
                res.status = DecodeStatus::UnknownType;
                return res;
            }
            Observation o;
            o.sat.system = static_cast<System>(q[0]);
            o.sat.prn = q[1];
            o.band = static_cast<BandCode>(q[2]);
            o.pseudorange_m = static_cast<double>(get_s64(q + 3)) * 1e-4;
            o.carrier_cycles = static_cast<double>(get_s64(q + 11)) * 1e-3;
            o.cn0_dbhz = q[19] * 0.25;
            o.lock_time_s = get_u16(q + 20);
            o.epoch = t;
            msg.obs.push_back(o);
        }
    } else {
        res.status = DecodeStatus::UnknownType;
        return res;
    }
    res.status = DecodeStatus::Ok;
    res.message = std::move(msg);
    return res;
}

DecodeResult decode_frame(const std::vector<std::uint8_t>& buf) {
    return decode_frame(buf.data(), buf.size());
}

std::vector<FrameParser::Event> FrameParser::push(const std::uint8_t* data, std::size_t len) {
    buf_.insert(buf_.end(), data, data + len);
    std::vector<Event> events;
    std::size_t pos = 0;
    for (;;) {
        DecodeResult r = decode_frame(buf_.data() + pos, buf_.size() - pos);
        if (r.status == DecodeStatus::Truncated) {
            pos += r.consumed; // drop leading garbage, keep the partial frame
            break;
        }
        Event ev{r.status, std::move(r.message), {}};
        if (r.status == DecodeStatus::Ok && r.frame_size > 0) {
            const std::size_t begin = pos + r.consumed - r.frame_size;
            ev.raw.assign(buf_.begin() + static_cast<std::ptrdiff_t>(begin),
                          buf_.begin() + static_cast<std::ptrdiff_t>(pos + r.consumed));
        }
        pos += r.consumed;
        events.push_back(std::move(ev));
    }
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos));
    return events;
}

Observation quantize_to_wire(const Observation& o) {
    Observation q = o;
    q.pseudorange_m = static_cast<double>(std::llround(o.pseudorange_m / 1e-4)) * 1e-4;
    q.carrier_cycles = static_cast<double>(std::llround(o.carrier_cycles / 1e-3)) * 1e-3;
    q.cn0_dbhz = std::nearbyint(o.cn0_dbhz * 4.0) * 0.25;
    q.lock_time_s = std::nearbyint(o.lock_time_s);
    return q;
}

} // namespace rtkbench
