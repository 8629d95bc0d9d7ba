// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace blackmirror {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class EmptyPrompt : public InvalidArgument {
public:
    EmptyPrompt() : InvalidArgument("prompt must be non-empty") {}
};

/// Failures reaching or interpreting a remote model endpoint.
class GatewayError : public Error {
public:
    using Error::Error;
};

/// A single transport attempt failed in a way that may succeed on retry
/// (connection refused, timeout, 5xx).
class TransportError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class RetryExhausted : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// The endpoint answered, but the body did not match the wire contract.
class ProtocolError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// Replay mode was asked for a request that was never recorded.
class ReplayMiss : public GatewayError {
public:
    explicit ReplayMiss(const std::string& digest)
        : GatewayError("replay cache miss for request " + digest), digest_(digest) {}

    const std::string& digest() const noexcept { return digest_; }

private:
    std::string digest_;
};

/// An evaluation run stopped early; its checkpoint can be resumed.
class RunAborted : public Error {
public:
    using Error::Error;
};

}  // namespace blackmirror
