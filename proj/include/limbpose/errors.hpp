// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace limbpose {

/// Argument outside an operation's domain (bad fraction, malformed vector, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The orthogonal line through a projection point does not yield a usable
/// cross-section of the mask.
class NoSection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Keypoint sampling exhausted its retry budget.
class GenerationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A norm-pose coordinate lies inside no template limb.
class NotOnLimb : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (annotation files, images, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration (unknown keys, missing seed, bad values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values during training or evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace limbpose
