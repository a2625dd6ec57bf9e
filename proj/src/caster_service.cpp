// caster_service.cpp : TCP caster, rover client, station push
#include "rtkbench/caster_service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "rtkbench/errors.hpp"

namespace rtkbench {

namespace {

bool send_all(int fd, const void* data, std::size_t len) {
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
        const ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL);
        if (n <= 0) return false;
        p += n;
        len -= static_cast<std::size_t>(n);
    }
    return true;
}

bool send_line(int fd, const char* line) { return send_all(fd, line, std::strlen(line)); }

// reads one \n-terminated line (bounded); empty on error
std::string read_line(int fd, std::size_t cap = 256) {
    std::string line;
    char c;
    while (line.size() < cap) {
        const ssize_t n = ::recv(fd, &c, 1, 0);
        if (n <= 0) return {};
        line.push_back(c);
        if (c == '\n') break;
    }
    return line;
}

int connect_to(const std::string& host, std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ConnectionRefused("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw ConnectionRefused("bad address: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw ConnectionRefused("connect to " + host + " failed");
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return fd;
}

} // namespace

struct CasterService::Subscriber {
    int fd;
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::vector<std::uint8_t>> queue;
    bool dead = false;
};

struct CasterService::Mount {
    MountpointDef def;
    std::mutex mutex;
    std::vector<std::shared_ptr<Subscriber>> subscribers;
};

CasterService::CasterService(std::string bind_address, std::uint16_t port,
                             std::vector<MountpointDef> mounts)
    : bind_address_(std::move(bind_address)), port_(port) {
    for (auto& m : mounts) {
        if (m.name.empty() || m.name.size() > 32) throw ConfigError("mountpoint name length");
        auto mp = std::make_shared<Mount>();
        mp->def = m;
        mounts_.push_back(mp);
    }
}

CasterService::~CasterService() { stop(); }

void CasterService::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw ConfigError("caster: socket() failed");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port_);
    if (::inet_pton(AF_INET, bind_address_.c_str(), &addr.sin_addr) != 1) {
        throw ConfigError("caster: bad bind address " + bind_address_);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw ConfigError("caster: bind failed on " + bind_address_);
    }
    if (::listen(listen_fd_, 16) != 0) throw ConfigError("caster: listen failed");
    socklen_t alen = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &alen);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void CasterService::stop() {
    if (!running_) return;
    running_ = false;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    for (auto& m : mounts_) {
        std::lock_guard lk(m->mutex);
        for (auto& s : m->subscribers) {
            std::lock_guard sk(s->mutex);
            s->dead = true;
            ::shutdown(s->fd, SHUT_RDWR);
            s->cv.notify_all();
        }
    }
    std::lock_guard lk(conn_mutex_);
    for (auto& t : conn_threads_) {
        if (t.joinable()) t.join();
    }
    conn_threads_.clear();
}

void CasterService::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::lock_guard lk(conn_mutex_);
        conn_threads_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void CasterService::handle_connection(int fd) {
    const std::string line = read_line(fd);
    // expected: "GET /<mount> <token>\r\n" or "SRC /<mount> <token>\r\n"
    std::string verb, path, token;
    {
        std::size_t a = line.find(' ');
        std::size_t b = a == std::string::npos ? std::string::npos : line.find(' ', a + 1);
        if (a != std::string::npos && b != std::string::npos) {
            verb = line.substr(0, a);
            path = line.substr(a + 1, b - a - 1);
            token = line.substr(b + 1);
            while (!token.empty() && (token.back() == '\r' || token.back() == '\n')) {
                token.pop_back();
            }
        }
    }
    if ((verb != "GET" && verb != "SRC") || path.empty() || path[0] != '/') {
        send_line(fd, "ERR mount\r\n");
        ::close(fd);
        return;
    }
    std::shared_ptr<Mount> mount;
    for (auto& m : mounts_) {
        if ("/" + m->def.name == path) mount = m;
    }
    if (!mount) {
        send_line(fd, "ERR mount\r\n");
        ::close(fd);
        return;
    }
    if (token != mount->def.token) {
        send_line(fd, "ERR auth\r\n");
        ::close(fd);
        return;
    }
    if (!send_line(fd, "OK\r\n")) {
        ::close(fd);
        return;
    }

    if (verb == "GET") {
        auto sub = std::make_shared<Subscriber>();
        sub->fd = fd;
        {
            std::lock_guard lk(mount->mutex);
            mount->subscribers.push_back(sub);
        }
        // writer loop; the read side is only used to detect disconnects
        for (;;) {
            std::vector<std::uint8_t> frame;
            {
                std::unique_lock lk(sub->mutex);
                sub->cv.wait_for(lk, std::chrono::milliseconds(200),
                                 [&] { return sub->dead || !sub->queue.empty(); });
                if (sub->dead) break;
                if (sub->queue.empty()) {
                    if (!running_) break;
                    continue;
                }
                frame = std::move(sub->queue.front());
                sub->queue.pop_front();
            }
            if (!send_all(fd, frame.data(), frame.size())) break;
        }
        {
            std::lock_guard lk(mount->mutex);
            std::erase(mount->subscribers, sub);
        }
        ::close(fd);
        return;
    }

    // station source: parse frames out of the byte stream, fan out in order
    FrameParser parser;
    std::vector<std::uint8_t> buf(4096);
    for (;;) {
        const ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
        if (n <= 0) break;
        for (FrameParser::Event& ev : parser.push(buf.data(), static_cast<std::size_t>(n))) {
            if (ev.status != DecodeStatus::Ok || ev.raw.empty()) continue;
            std::lock_guard lk(mount->mutex);
            for (auto& sub : mount->subscribers) {
                std::lock_guard sk(sub->mutex);
                if (sub->dead) continue;
                if (sub->queue.size() >= kMaxBacklogFrames) {
                    sub->dead = true; // slow client: disconnect
                    ::shutdown(sub->fd, SHUT_RDWR);
                    sub->cv.notify_all();
                    continue;
                }
                sub->queue.push_back(ev.raw);
                sub->cv.notify_all();
            }
        }
    }
    ::close(fd);
}

RoverSubscription::RoverSubscription(const std::string& host, std::uint16_t port,
                                     const std::string& mount, const std::string& token) {
    fd_ = connect_to(host, port);
    const std::string req = "GET /" + mount + " " + token + "\r\n";
    if (!send_all(fd_, req.data(), req.size())) {
        ::close(fd_);
        throw ConnectionRefused("subscribe: send failed");
    }
    const std::string resp = read_line(fd_);
    if (resp.rfind("OK", 0) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw AuthRejected("subscribe rejected: " + resp);
    }
}

RoverSubscription::~RoverSubscription() {
    if (fd_ >= 0) ::close(fd_);
}

bool RoverSubscription::closed() { return closed_; }

std::optional<FrameParser::Event> RoverSubscription::next(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        if (!pending_.empty()) {
            FrameParser::Event ev = std::move(pending_.front());
            pending_.pop_front();
            return ev;
        }
        if (closed_) return std::nullopt;
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) return std::nullopt;
        pollfd pfd{fd_, POLLIN, 0};
        const int ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
        if (::poll(&pfd, 1, std::max(ms, 1)) <= 0) continue;
        std::uint8_t buf[4096];
        const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
        if (n <= 0) {
            closed_ = true;
            continue;
        }
        for (auto& ev : parser_.push(buf, static_cast<std::size_t>(n))) {
            pending_.push_back(std::move(ev));
        }
    }
}

StationPush::StationPush(const std::string& host, std::uint16_t port, const std::string& mount,
                         const std::string& token) {
    fd_ = connect_to(host, port);
    const std::string req = "SRC /" + mount + " " + token + "\r\n";
    if (!send_all(fd_, req.data(), req.size())) {
        ::close(fd_);
        throw ConnectionRefused("station push: send failed");
    }
    const std::string resp = read_line(fd_);
    if (resp.rfind("OK", 0) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw AuthRejected("station push rejected: " + resp);
    }
}

StationPush::~StationPush() {
    if (fd_ >= 0) ::close(fd_);
}

void StationPush::push(const std::vector<std::uint8_t>& frame) {
    if (fd_ < 0 || !send_all(fd_, frame.data(), frame.size())) {
        throw ConnectionRefused("station push: connection lost");
    }
}

} // namespace rtkbench
