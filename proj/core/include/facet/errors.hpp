#pragma once

#include <stdexcept>
#include <string>

namespace facet {

// Base for every error the library raises on purpose. `code()` is a stable
// machine-readable tag; the what() string carries the human detail.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("validation", message) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("parse", message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config", message) {}
};

class StageError : public Error {
public:
    explicit StageError(const std::string& message) : Error("stage", message) {}
};

// Raised by the replay backend when a request is not in the cache.
class CacheMissError : public Error {
public:
    CacheMissError(const std::string& digest, const std::string& message)
        : Error("cache-miss", message), digest_(digest) {}
    const std::string& digest() const { return digest_; }

private:
    std::string digest_;
};

enum class FailureKind {
    transient,  // rate limit, server error, timeout: retried under policy
    exhausted,  // transient retries used up
    auth,
    malformed,  // endpoint answered but the body was not what the protocol says
    fetch,      // image locator could not be resolved
    unscripted, // mock backend had no rule for the request
};

const char* failure_kind_name(FailureKind kind);

class BackendError : public Error {
public:
    BackendError(FailureKind kind, const std::string& message)
        : Error(failure_kind_name(kind), message), kind_(kind) {}
    FailureKind kind() const { return kind_; }

private:
    FailureKind kind_;
};

} // namespace facet
