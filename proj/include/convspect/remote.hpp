#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "convspect/oracle.hpp"

namespace convspect {

/// Wire protocol (little-endian, one request/response per round trip,
/// connection reuse permitted):
///   request:  magic "SFA1", u32 channels, u32 n,
///             channels*n*n float64 pixels, channel-major row-major
///   response: magic "SFA1", u32 label
/// Anything else on the wire is a malformed frame.

/// Label-only client for a remotely served oracle. Holds one connection;
/// one request in flight at a time. Network failures surface as
/// ConnectionRefusedError / TimeoutError / MalformedResponseError, never
/// as fabricated labels.
class RemoteOracle : public Oracle {
  public:
    /// endpoint: "host:port" or "tcp://host:port".
    explicit RemoteOracle(const std::string& endpoint, double timeout_seconds = 30.0);
    ~RemoteOracle() override;

    RemoteOracle(const RemoteOracle&) = delete;
    RemoteOracle& operator=(const RemoteOracle&) = delete;

    std::string descriptor() const override;

  protected:
    Label label_for(const RealTensor& x) override;

  private:
    std::string endpoint_;
    int fd_ = -1;
};

std::unique_ptr<RemoteOracle> connect_remote_oracle(const std::string& endpoint,
                                                    double timeout_seconds = 30.0);

/// Serves an oracle over the wire protocol. start() binds and spawns the
/// accept loop (port 0 picks a free port); stop() shuts it down. One thread
/// per connection; malformed requests close that connection.
class OracleServer {
  public:
    explicit OracleServer(Oracle& oracle);
    ~OracleServer();

    OracleServer(const OracleServer&) = delete;
    OracleServer& operator=(const OracleServer&) = delete;

    /// listen_addr: "host:port" or "tcp://host:port"; returns the bound port.
    int start(const std::string& listen_addr);
    void stop();
    int port() const { return port_; }

  private:
    void accept_loop();

    Oracle& oracle_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex conns_mutex_;
    std::vector<int> conns_; // live worker connections, shut down on stop()
};

/// Splits "tcp://host:port" / "host:port" into (host, port).
std::pair<std::string, int> parse_endpoint(const std::string& endpoint);

} // namespace convspect
