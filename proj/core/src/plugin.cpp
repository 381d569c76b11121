#include "obfair/plugin.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace obfair {

using nlohmann::json;

PluginClient::PluginClient(std::vector<std::string> command, double timeout_sec)
    : command_(std::move(command)), timeout_sec_(timeout_sec) {
    if (command_.empty()) throw ConfigError("plugin command must not be empty");
    spawn();
    try {
        json hello = request(json{{"op", "hello"}, {"version", 1}});
        if (!hello.value("ok", false))
            throw ProtocolError("plugin handshake rejected: " + hello.dump());
        if (!hello.contains("ops") || !hello["ops"].is_array())
            throw ProtocolError("plugin handshake missing ops list");
        for (const auto& op : hello["ops"]) ops_.push_back(op.get<std::string>());
    } catch (...) {
        shutdown();
        throw;
    }
}

PluginClient::~PluginClient() { shutdown(); }

bool PluginClient::supports(const std::string& op) const {
    for (const auto& o : ops_)
        if (o == op) return true;
    return false;
}

void PluginClient::spawn() {
    int in_pipe[2];  // parent -> child
    int out_pipe[2]; // child -> parent
    if (pipe(in_pipe) != 0) throw TransportError("pipe() failed");
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw TransportError("pipe() failed");
    }

    pid_t pid = fork();
    if (pid < 0) {
        close(in_pipe[0]); close(in_pipe[1]);
        close(out_pipe[0]); close(out_pipe[1]);
        throw TransportError("fork() failed");
    }
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]); close(in_pipe[1]);
        close(out_pipe[0]); close(out_pipe[1]);
        std::vector<char*> argv;
        argv.reserve(command_.size() + 1);
        for (auto& a : command_) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execvp(argv[0], argv.data());
        // exec failed; exit quietly so the parent sees EOF.
        _exit(127);
    }

    close(in_pipe[0]);
    close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    // Ignore SIGPIPE per write; handled via EPIPE.
    signal(SIGPIPE, SIG_IGN);
}

void PluginClient::shutdown() noexcept {
    if (to_child_ >= 0) { close(to_child_); to_child_ = -1; }
    if (from_child_ >= 0) { close(from_child_); from_child_ = -1; }
    if (pid_ > 0) {
        int status = 0;
        // Give the plugin a moment to exit after stdin closes, then kill.
        for (int i = 0; i < 50; ++i) {
            pid_t r = waitpid(pid_, &status, WNOHANG);
            if (r == pid_) { pid_ = -1; return; }
            usleep(10'000);
        }
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void PluginClient::write_line(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    std::size_t off = 0;
    while (off < payload.size()) {
        ssize_t n = write(to_child_, payload.data() + off, payload.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("plugin stdin write failed: ") +
                                 std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string PluginClient::read_line() {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_sec_);
    for (;;) {
        auto nl = rdbuf_.find('\n');
        if (nl != std::string::npos) {
            std::string line = rdbuf_.substr(0, nl);
            rdbuf_.erase(0, nl + 1);
            return line;
        }
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) throw TransportError("plugin response timed out");
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                             deadline - now).count();
        pollfd pfd{from_child_, POLLIN, 0};
        int pr = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1000)));
        if (pr < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("poll() failed: ") + std::strerror(errno));
        }
        if (pr == 0) continue;
        char buf[4096];
        ssize_t n = read(from_child_, buf, sizeof(buf));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("plugin stdout read failed: ") +
                                 std::strerror(errno));
        }
        if (n == 0) throw TransportError("plugin closed its stdout (crashed?)");
        rdbuf_.append(buf, static_cast<std::size_t>(n));
    }
}

json PluginClient::request(const json& req) {
    write_line(req.dump());
    std::string line = read_line();
    json resp;
    try {
        resp = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("plugin response is not valid JSON: ") + e.what());
    }
    if (resp.is_object() && resp.contains("error"))
        throw ProtocolError("plugin error: " + resp["error"].dump());
    return resp;
}

} // namespace obfair
