// Copyright 2026 The Panfuse Authors.
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

#ifndef PANFUSE_CLI_HPP_
#define PANFUSE_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace panfuse {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitFormat = 2;

// Entry point of the `panfuse` tool. args[0] is the program name.
// Subcommands: fuse, eval, proposals, synth.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// "1/512" or a decimal literal. Throws ValidationError.
double parse_fraction(const std::string& text);

}  // namespace panfuse

#endif  // PANFUSE_CLI_HPP_
