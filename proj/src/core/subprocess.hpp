// Copyright 2026 The FakeMark Authors
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

#include <cstdint>
#include <string>
#include <vector>

namespace fakemark {

struct ProcessResult {
  int exit_code = -1;
  std::vector<uint8_t> out;
  bool ok() const { return exit_code == 0; }
};

// Runs `command` through /bin/sh, feeding stdin_bytes and capturing stdout.
// Stdin writing and stdout reading are interleaved with poll() so large
// payloads cannot deadlock on pipe buffers.
ProcessResult run_process(const std::string& command, const std::vector<uint8_t>& stdin_bytes);

// Substitutes {in}/{out} placeholders, runs the command on temp files, and
// returns the produced file contents. Used by file-based codec adapters.
ProcessResult run_file_adapter(const std::string& command_template,
                               const std::vector<uint8_t>& input, const std::string& suffix);

}  // namespace fakemark
