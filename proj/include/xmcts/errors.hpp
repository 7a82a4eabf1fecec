#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace xmcts {

// Base of every error thrown by the library. `code()` is a stable
// machine-readable tag used by the CLI and the HTTP service.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& message) : Error("invalid-input", message) {}
};

class InvalidState : public Error {
public:
    explicit InvalidState(const std::string& message) : Error("invalid-state", message) {}
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& message) : Error("not-found", message) {}
};

class Conflict : public Error {
public:
    explicit Conflict(const std::string& message) : Error("conflict", message) {}
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, std::size_t offset)
        : Error("syntax-error", message + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnsupportedQuantification : public Error {
public:
    explicit UnsupportedQuantification(const std::string& message)
        : Error("unsupported-quantification", message) {}
};

class TemplateError : public Error {
public:
    TemplateError(const std::string& message, std::string slot)
        : Error("template-error", message), slot_(std::move(slot)) {}

    const std::string& slot() const noexcept { return slot_; }

private:
    std::string slot_;
};

} // namespace xmcts
