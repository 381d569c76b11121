#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "obfair/errors.hpp"

namespace obfair {

/// Client side of the line-delimited JSON plugin protocol.
///
/// The plugin is an external process speaking one JSON object per line over
/// stdin/stdout. On startup the client sends {"op":"hello","version":1} and
/// expects {"ok":true,"ops":[...]}. Requests are answered in order. A client
/// must be owned by exactly one worker at a time.
class PluginClient {
public:
    /// Spawn the plugin and perform the handshake.
    /// timeout applies to each response read (seconds).
    explicit PluginClient(std::vector<std::string> command, double timeout_sec = 30.0);
    ~PluginClient();

    PluginClient(const PluginClient&) = delete;
    PluginClient& operator=(const PluginClient&) = delete;

    /// Ops advertised in the handshake ("detect", "embed", ...).
    const std::vector<std::string>& ops() const { return ops_; }
    bool supports(const std::string& op) const;

    /// Send one request line, wait for one response line.
    /// Throws TransportError on crash/timeout, ProtocolError on bad replies
    /// or an in-band {"error": ...} response.
    nlohmann::json request(const nlohmann::json& req);

    const std::vector<std::string>& command() const { return command_; }
    double timeout_sec() const { return timeout_sec_; }

private:
    void spawn();
    void shutdown() noexcept;
    void write_line(const std::string& line);
    std::string read_line();

    std::vector<std::string> command_;
    double timeout_sec_;
    std::vector<std::string> ops_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string rdbuf_;
};

} // namespace obfair
