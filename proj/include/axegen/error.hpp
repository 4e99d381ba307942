// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace axe {

// Exception hierarchy. The CLI maps each kind onto a process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class MissingArtifact : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace axe

#define AXE_CHECK(cond, ...)                                     \
    do {                                                         \
        if (!(cond)) {                                           \
            throw ::axe::Error(std::string(__VA_ARGS__));        \
        }                                                        \
    } while (0)
