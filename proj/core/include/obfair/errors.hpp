#pragma once

#include <stdexcept>
#include <string>

namespace obfair {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid run configuration or CLI arguments. Maps to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed manifest input; message names the offending line.
class ManifestError : public Error {
public:
    using Error::Error;
};

/// Image decode/encode failure or invalid buffer geometry.
class ImageError : public Error {
public:
    using Error::Error;
};

/// Plugin produced a response that violates the wire protocol
/// (bad JSON, out-of-bounds box, wrong vector length, non-finite values).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Plugin process failure: crash, broken pipe, or timeout. Retriable:
/// the caller may respawn the plugin and repeat the request.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Unrecoverable pipeline stage failure. Maps to exit code 3.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& msg)
        : Error("stage '" + stage + "': " + msg), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace obfair
