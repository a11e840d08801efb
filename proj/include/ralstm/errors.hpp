// Copyright 2026 the ralstm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ralstm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/dimension conflicts. Messages name both offending shapes.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid configuration values (bad mode, p >= 1, malformed config file).
struct ConfigError : Error {
  using Error::Error;
};

// Corrupt or truncated files, bad magic bytes, wrong versions.
struct FormatError : Error {
  using Error::Error;
};

// Missing ids, tokens, or paths.
struct NotFoundError : Error {
  using Error::Error;
};

}  // namespace ralstm
