/*
 * Copyright 2026 The secmarket Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SECMARKET_ERRORS_H_
#define SECMARKET_ERRORS_H_

#include <stdexcept>
#include <string>

namespace secmarket {

// Base class for every error raised by the library. Each concrete type maps
// to one rejection reason so callers can dispatch on the failure kind.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* name() const { return "Error"; }
};

#define SECMARKET_ERROR_TYPE(NAME)                          \
  class NAME final : public Error {                         \
   public:                                                  \
    explicit NAME(const std::string& what) : Error(what) {} \
    const char* name() const override { return #NAME; }     \
  }

SECMARKET_ERROR_TYPE(RangeError);        // value outside the encodable range
SECMARKET_ERROR_TYPE(DimensionError);    // vector/shape mismatch
SECMARKET_ERROR_TYPE(RosterError);       // malformed participant roster
SECMARKET_ERROR_TYPE(ProtocolError);     // missing key-exchange material
SECMARKET_ERROR_TYPE(StateError);        // method not legal in current state
SECMARKET_ERROR_TYPE(ConfigError);       // invalid configuration
SECMARKET_ERROR_TYPE(AuthError);         // caller not authorized
SECMARKET_ERROR_TYPE(EligibilityError);  // contributor already incorporated
SECMARKET_ERROR_TYPE(FullError);         // roster already complete
SECMARKET_ERROR_TYPE(DuplicateError);    // repeated submission
SECMARKET_ERROR_TYPE(NotReadyError);     // precondition not yet met
SECMARKET_ERROR_TYPE(NoDataError);       // nothing to operate on
SECMARKET_ERROR_TYPE(ConstraintError);   // selection constraint infeasible
SECMARKET_ERROR_TYPE(DataError);         // dataset malformed or too small
SECMARKET_ERROR_TYPE(ConsistencyError);  // internally inconsistent inputs

#undef SECMARKET_ERROR_TYPE

}  // namespace secmarket

#endif  // SECMARKET_ERRORS_H_
