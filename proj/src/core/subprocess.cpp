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

#include "core/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fakemark {

ProcessResult run_process(const std::string& command, const std::vector<uint8_t>& stdin_bytes) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw std::runtime_error("run_process: pipe() failed");

  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("run_process: fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
  fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);

  ProcessResult res;
  size_t written = 0;
  bool stdin_open = true;
  if (stdin_bytes.empty()) {
    close(in_pipe[1]);
    stdin_open = false;
  }
  uint8_t buf[65536];
  bool stdout_open = true;
  while (stdin_open || stdout_open) {
    struct pollfd fds[2];
    int nfds = 0;
    int out_idx = -1, in_idx = -1;
    if (stdout_open) {
      fds[nfds] = {out_pipe[0], POLLIN, 0};
      out_idx = nfds++;
    }
    if (stdin_open) {
      fds[nfds] = {in_pipe[1], POLLOUT, 0};
      in_idx = nfds++;
    }
    if (poll(fds, static_cast<nfds_t>(nfds), 30000) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP))) {
      const ssize_t n = read(out_pipe[0], buf, sizeof buf);
      if (n > 0)
        res.out.insert(res.out.end(), buf, buf + n);
      else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        close(out_pipe[0]);
        stdout_open = false;
      }
    }
    if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
      if (fds[in_idx].revents & (POLLERR | POLLHUP)) {
        close(in_pipe[1]);
        stdin_open = false;
      } else {
        const ssize_t n = write(in_pipe[1], stdin_bytes.data() + written,
                                std::min<size_t>(stdin_bytes.size() - written, 65536));
        if (n > 0) written += static_cast<size_t>(n);
        if ((n < 0 && errno != EAGAIN && errno != EINTR) || written >= stdin_bytes.size()) {
          close(in_pipe[1]);
          stdin_open = false;
        }
      }
    }
  }
  if (stdout_open) close(out_pipe[0]);
  if (stdin_open) close(in_pipe[1]);

  int status = 0;
  waitpid(pid, &status, 0);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

ProcessResult run_file_adapter(const std::string& command_template,
                               const std::vector<uint8_t>& input, const std::string& suffix) {
  namespace fs = std::filesystem;
  static std::atomic<uint64_t> counter{0};
  const uint64_t id = counter.fetch_add(1);
  const fs::path dir = fs::temp_directory_path();
  const fs::path in_path = dir / ("fakemark_adapter_" + std::to_string(getpid()) + "_" +
                                  std::to_string(id) + "_in" + suffix);
  const fs::path out_path = dir / ("fakemark_adapter_" + std::to_string(getpid()) + "_" +
                                   std::to_string(id) + "_out" + suffix);
  {
    std::ofstream f(in_path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(input.data()), static_cast<std::streamsize>(input.size()));
  }
  std::string cmd = command_template;
  auto replace_all = [&cmd](const std::string& what, const std::string& with) {
    size_t pos = 0;
    while ((pos = cmd.find(what, pos)) != std::string::npos) {
      cmd.replace(pos, what.size(), with);
      pos += with.size();
    }
  };
  replace_all("{in}", in_path.string());
  replace_all("{out}", out_path.string());

  ProcessResult run = run_process(cmd, {});
  ProcessResult res;
  res.exit_code = run.exit_code;
  if (run.ok()) {
    std::ifstream f(out_path, std::ios::binary);
    if (f)
      res.out.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    else
      res.exit_code = -2;  // command succeeded but produced no file
  }
  std::error_code ec;
  fs::remove(in_path, ec);
  fs::remove(out_path, ec);
  return res;
}

}  // namespace fakemark
