#include "convspect/remote.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <vector>

namespace convspect {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'A', '1'};

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f64(std::vector<unsigned char>& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xff));
}

double get_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

// Reads exactly len bytes. Returns false on clean EOF at offset 0;
// throws on timeout, error, or mid-frame EOF.
bool read_exact(int fd, unsigned char* dst, size_t len, const char* what) {
    size_t got = 0;
    while (got < len) {
        const ssize_t r = ::recv(fd, dst + got, len - got, 0);
        if (r > 0) {
            got += static_cast<size_t>(r);
            continue;
        }
        if (r == 0) {
            if (got == 0) return false;
            throw MalformedResponseError(std::string(what) + ": connection closed mid-frame");
        }
        if (errno == EAGAIN || errno == EWOULDBLOCK)
            throw TimeoutError(std::string(what) + ": read timed out");
        if (errno == EINTR) continue;
        throw MalformedResponseError(std::string(what) + ": read failed: " + std::strerror(errno));
    }
    return true;
}

void write_exact(int fd, const unsigned char* src, size_t len, const char* what) {
    size_t sent = 0;
    while (sent < len) {
        const ssize_t r = ::send(fd, src + sent, len - sent, MSG_NOSIGNAL);
        if (r > 0) {
            sent += static_cast<size_t>(r);
            continue;
        }
        if (r < 0 && (errno == EAGAIN || errno == EWOULDBLOCK))
            throw TimeoutError(std::string(what) + ": write timed out");
        if (r < 0 && errno == EINTR) continue;
        throw MalformedResponseError(std::string(what) + ": write failed: " + std::strerror(errno));
    }
}

void set_timeout(int fd, double seconds) {
    timeval tv;
    tv.tv_sec = static_cast<long>(seconds);
    tv.tv_usec = static_cast<long>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

int connect_tcp(const std::string& host, int port, double timeout_seconds) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port_str = std::to_string(port);
    if (::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res) != 0 || res == nullptr)
        throw ConnectionRefusedError("cannot resolve " + host + ":" + port_str);
    int fd = -1;
    std::string err = "connection refused";
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        set_timeout(fd, timeout_seconds);
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        err = std::strerror(errno);
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw ConnectionRefusedError("cannot connect to " + host + ":" + port_str + ": " + err);
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return fd;
}

} // namespace

std::pair<std::string, int> parse_endpoint(const std::string& endpoint) {
    std::string rest = endpoint;
    const std::string prefix = "tcp://";
    if (rest.rfind(prefix, 0) == 0) rest = rest.substr(prefix.size());
    const size_t colon = rest.rfind(':');
    if (colon == std::string::npos || colon + 1 >= rest.size())
        throw ContractError("endpoint must be host:port or tcp://host:port, got '" + endpoint + "'");
    const std::string host = colon == 0 ? std::string("0.0.0.0") : rest.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
        throw ContractError("bad port in endpoint '" + endpoint + "'");
    }
    if (port < 0 || port > 65535) throw ContractError("port out of range in '" + endpoint + "'");
    return {host, port};
}

RemoteOracle::RemoteOracle(const std::string& endpoint, double timeout_seconds)
    : endpoint_(endpoint) {
    const auto [host, port] = parse_endpoint(endpoint);
    fd_ = connect_tcp(host, port, timeout_seconds);
}

RemoteOracle::~RemoteOracle() {
    if (fd_ >= 0) ::close(fd_);
}

std::string RemoteOracle::descriptor() const { return "remote(" + endpoint_ + ")"; }

Label RemoteOracle::label_for(const RealTensor& x) {
    std::vector<unsigned char> frame;
    frame.reserve(12 + x.v.size() * 8);
    frame.insert(frame.end(), kMagic, kMagic + 4);
    put_u32(frame, static_cast<std::uint32_t>(x.channels));
    put_u32(frame, static_cast<std::uint32_t>(x.n));
    for (double v : x.v) put_f64(frame, v);
    write_exact(fd_, frame.data(), frame.size(), "oracle request");

    unsigned char resp[8];
    if (!read_exact(fd_, resp, sizeof(resp), "oracle response"))
        throw MalformedResponseError("oracle response: connection closed before response");
    if (std::memcmp(resp, kMagic, 4) != 0)
        throw MalformedResponseError("oracle response: bad magic");
    return static_cast<Label>(get_u32(resp + 4));
}

std::unique_ptr<RemoteOracle> connect_remote_oracle(const std::string& endpoint,
                                                    double timeout_seconds) {
    return std::make_unique<RemoteOracle>(endpoint, timeout_seconds);
}

OracleServer::OracleServer(Oracle& oracle) : oracle_(oracle) {}

OracleServer::~OracleServer() { stop(); }

int OracleServer::start(const std::string& listen_addr) {
    const auto [host, port] = parse_endpoint(listen_addr);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw ConnectionRefusedError("server: cannot create socket");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        if (host == "localhost")
            ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
        else
            addr.sin_addr.s_addr = INADDR_ANY;
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw ConnectionRefusedError("server: bind failed for " + listen_addr + ": " +
                                     std::strerror(errno));
    }
    if (::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw ConnectionRefusedError("server: listen failed");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return port_;
}

void OracleServer::stop() {
    if (!running_.exchange(false)) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    {
        std::lock_guard<std::mutex> lock(conns_mutex_);
        for (int conn : conns_) ::shutdown(conn, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
}

void OracleServer::accept_loop() {
    std::vector<std::thread> workers;
    while (running_) {
        const int conn = ::accept(listen_fd_, nullptr, nullptr);
        if (conn < 0) {
            if (!running_) break;
            continue;
        }
        set_timeout(conn, 30.0);
        {
            std::lock_guard<std::mutex> lock(conns_mutex_);
            conns_.push_back(conn);
        }
        workers.emplace_back([this, conn] {
            // serve request/response pairs until EOF or a malformed frame
            for (;;) {
                unsigned char header[12];
                try {
                    if (!read_exact(conn, header, sizeof(header), "server request")) break;
                    if (std::memcmp(header, kMagic, 4) != 0) break;
                    const std::uint32_t channels = get_u32(header + 4);
                    const std::uint32_t n = get_u32(header + 8);
                    if (channels == 0 || n == 0 || channels > 4096 || n > 65536) break;
                    const size_t count = static_cast<size_t>(channels) * n * n;
                    std::vector<unsigned char> payload(count * 8);
                    if (!read_exact(conn, payload.data(), payload.size(), "server payload")) break;

                    RealTensor x(static_cast<int>(channels), static_cast<int>(n));
                    for (size_t i = 0; i < count; ++i) x.v[i] = get_f64(payload.data() + i * 8);
                    const Label label = oracle_.query(x);

                    std::vector<unsigned char> resp;
                    resp.insert(resp.end(), kMagic, kMagic + 4);
                    put_u32(resp, static_cast<std::uint32_t>(label));
                    write_exact(conn, resp.data(), resp.size(), "server response");
                } catch (const std::exception&) {
                    break;
                }
            }
            {
                std::lock_guard<std::mutex> lock(conns_mutex_);
                std::erase(conns_, conn);
            }
            ::close(conn);
        });
    }
    for (auto& w : workers)
        if (w.joinable()) w.join();
}

} // namespace convspect
