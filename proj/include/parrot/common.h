// parrot/common.h

// Copyright 2026  Parrot Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PARROT_COMMON_H_
#define PARROT_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace parrot {

/// Base of all library errors.  The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an invalid argument or configuration (exit 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Required data or artifact is missing or unreadable (exit 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was breached (exit 4).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// All randomness in the library flows through this engine type.
using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a stream index
/// (splitmix64 finalizer).
uint64_t DeriveSeed(uint64_t base, uint64_t stream);

/// 64-bit FNV-1a.
uint64_t Fnv1a64(std::string_view bytes);

/// Formats a 64-bit hash as 16 lowercase hex digits.
std::string HexDigest(uint64_t hash);

}  // namespace parrot

#endif  // PARROT_COMMON_H_
