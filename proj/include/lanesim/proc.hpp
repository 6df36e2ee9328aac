#pragma once

#include <csignal>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "lanesim/errors.hpp"

namespace lanesim {

/// Child process with piped stdin/stdout and deadline-bounded I/O.
/// The command line runs under /bin/sh -c.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command) {
    // A dead child must surface as EPIPE on write, not kill the host.
    static bool sigpipe_ignored = [] {
      std::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;

    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw ControllerError("subprocess: pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw ControllerError("subprocess: fork() failed");
    if (pid_ == 0) {
      // Own process group so shutdown can reap the shell and anything it
      // spawned, not just the direct child.
      setpgid(0, 0);
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    setpgid(pid_, pid_);  // either side may win the race; both set the same group
    close(to_child[0]);
    close(from_child[1]);
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
  }

  ~Subprocess() { shutdown(); }

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  bool running() const { return pid_ > 0; }

  /// Write the whole buffer or throw; waits at most timeout_s overall.
  void write_all(const void* data, size_t size, double timeout_s) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    double budget_ms = timeout_s * 1000.0;
    while (size > 0) {
      struct pollfd pfd{stdin_fd_, POLLOUT, 0};
      int pr = poll(&pfd, 1, static_cast<int>(budget_ms > 0 ? budget_ms : 0));
      if (pr == 0) throw ControllerError("subprocess: write timed out");
      if (pr < 0) throw ControllerError("subprocess: poll() failed on write");
      ssize_t n = ::write(stdin_fd_, p, size);
      if (n < 0) throw ControllerError("subprocess: write failed (controller exited?)");
      p += n;
      size -= static_cast<size_t>(n);
    }
  }

  /// Read exactly `size` bytes or throw; waits at most timeout_s overall.
  void read_all(void* data, size_t size, double timeout_s) {
    uint8_t* p = static_cast<uint8_t*>(data);
    double deadline_ms = timeout_s * 1000.0;
    while (size > 0) {
      struct pollfd pfd{stdout_fd_, POLLIN, 0};
      int pr = poll(&pfd, 1, static_cast<int>(deadline_ms > 0 ? deadline_ms : 0));
      if (pr == 0) throw ControllerError("subprocess: reply timed out");
      if (pr < 0) throw ControllerError("subprocess: poll() failed on read");
      ssize_t n = ::read(stdout_fd_, p, size);
      if (n == 0) throw ControllerError("subprocess: controller closed its output");
      if (n < 0) throw ControllerError("subprocess: read failed");
      p += n;
      size -= static_cast<size_t>(n);
    }
  }

  void close_stdin() {
    if (stdin_fd_ >= 0) {
      ::close(stdin_fd_);
      stdin_fd_ = -1;
    }
  }

  /// Close pipes and reap the child, escalating to a process-group SIGKILL
  /// if it lingers.
  void shutdown() {
    if (pid_ <= 0) return;
    close_stdin();
    if (stdout_fd_ >= 0) {
      ::close(stdout_fd_);
      stdout_fd_ = -1;
    }
    for (int i = 0; i < 50; ++i) {  // ~0.5 s of grace
      int status = 0;
      pid_t r = waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        kill(-pid_, SIGKILL);  // sweep any grandchildren left in the group
        pid_ = -1;
        return;
      }
      usleep(10000);
    }
    kill(-pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
};

}  // namespace lanesim
