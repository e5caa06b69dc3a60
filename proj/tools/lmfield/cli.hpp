// Copyright 2026 The lmfield Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LMFIELD_TOOLS_CLI_HPP_
#define LMFIELD_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace lmfield::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFormat = 3;
inline constexpr int kExitNumerical = 4;

// Runs one command line; args[0] is the program name. Errors are reported
// on `err` as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace lmfield::cli

#endif  // LMFIELD_TOOLS_CLI_HPP_
