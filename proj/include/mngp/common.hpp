// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mngp {

using Rng = std::mt19937_64;

/// Base class for recoverable runtime failures (I/O, malformed inputs, bad configuration).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

[[noreturn]] void contract_failure(const char* cond, const std::string& msg, const char* file, int line);

#define MNGP_EXPECTS(cond, msg)                                               \
    do {                                                                      \
        if (!(cond)) ::mngp::contract_failure(#cond, (msg), __FILE__, __LINE__); \
    } while (0)

/// Round a float through IEEE binary16 storage. Values beyond the binary16 range saturate.
float round_to_half(float x);

/// Step length used for ray marching inside the unit cube (1024 steps across the diagonal).
inline const float kMarchStep = static_cast<float>(1.7320508075688772 / 1024.0);

}  // namespace mngp
