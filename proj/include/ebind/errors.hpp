#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ebind {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class domain_error : public error {
public:
    using error::error;
};

class invalid_profile : public error {
public:
    using error::error;
};

class infrared_divergence : public error {
public:
    using error::error;
};

// Tabulation or lattice too coarse for the requested quantity.
class resolution_error : public error {
public:
    using error::error;
};

class unsupported : public error {
public:
    using error::error;
};

class bracket_error : public error {
public:
    using error::error;
};

class too_large : public error {
public:
    too_large(const std::string& what, std::size_t required, std::size_t cap)
        : error(what + " (required " + std::to_string(required) + ", cap " +
                std::to_string(cap) + ")"),
          required_(required),
          cap_(cap) {}

    std::size_t required() const noexcept { return required_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t required_;
    std::size_t cap_;
};

// Raised by callers that need a converged answer and did not get one.
class not_converged : public error {
public:
    using error::error;
};

}  // namespace ebind
