// caster_service.hpp : TCP correction streaming (mountpoints, token auth)
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rtkbench/caster.hpp"

namespace rtkbench {

struct MountpointDef {
    std::string name; // ASCII, <= 32 chars
    std::uint16_t station_id = 0;
    std::string token;
};

// Handshake (exact byte sequences, one line per connection):
//   rover:   "GET /<mount> <token>\r\n"  -> "OK\r\n" + frame stream
//   station: "SRC /<mount> <token>\r\n"  -> "OK\r\n", then pushes frames
//   errors:  "ERR auth\r\n" / "ERR mount\r\n" then close
// Station frames are validated, then fanned out to every subscriber of the
// mountpoint in arrival order. Slow clients are dropped after a 10-frame
// backlog. Garbage from any client never affects other connections.
class CasterService {
public:
    CasterService(std::string bind_address, std::uint16_t port, std::vector<MountpointDef> mounts);
    ~CasterService();

    void start();
    void stop();
    std::uint16_t port() const { return port_; } // resolved port (when 0 requested)

    static constexpr std::size_t kMaxBacklogFrames = 10;

private:
    struct Subscriber;
    struct Mount;
    void accept_loop();
    void handle_connection(int fd);

    std::string bind_address_;
    std::uint16_t port_;
    std::vector<std::shared_ptr<Mount>> mounts_;
    int listen_fd_ = -1;
    std::thread accept_thread_;
    std::mutex conn_mutex_;
    std::vector<std::thread> conn_threads_;
    bool running_ = false;
};

// Rover-side client: subscribes to a mountpoint and yields decoded messages
// (decode errors surface as events without terminating the stream).
class RoverSubscription {
public:
    RoverSubscription(const std::string& host, std::uint16_t port, const std::string& mount,
                      const std::string& token);
    ~RoverSubscription();

    // next decoded event within the timeout; nullopt on timeout or close
    std::optional<FrameParser::Event> next(std::chrono::milliseconds timeout);
    bool closed();

private:
    int fd_ = -1;
    FrameParser parser_;
    std::deque<FrameParser::Event> pending_;
    bool closed_ = false;
};

// Station-side push helper (used by tests and the station process).
class StationPush {
public:
    StationPush(const std::string& host, std::uint16_t port, const std::string& mount,
                const std::string& token);
    ~StationPush();

    void push(const std::vector<std::uint8_t>& frame);
    void push(const CorrectionMessage& msg) { push(encode_frame(msg)); }

private:
    int fd_ = -1;
};

} // namespace rtkbench
