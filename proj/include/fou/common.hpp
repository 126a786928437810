#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fou {

inline constexpr const char* version_string = "0.1.0";

// Base class for everything this library throws.  `code()` is a short
// machine-readable tag that ends up in run manifests.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

struct NumericalError : Error {
    NumericalError(std::string code, const std::string& what) : Error(std::move(code), what) {}
};

struct InternalError : Error {
    explicit InternalError(const std::string& what) : Error("internal", what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace fou
