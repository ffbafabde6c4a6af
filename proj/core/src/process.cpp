#include "gangmam/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "gangmam/error.hpp"

namespace gangmam {

namespace fs = std::filesystem;

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(Errc::IoError, std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  Pipe(const Pipe&) = delete;
  Pipe& operator=(const Pipe&) = delete;
  int read_end() const { return fds[0]; }
  int write_end() const { return fds[1]; }
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
};

}  // namespace

std::string_view tool_name(Tool tool) noexcept {
  switch (tool) {
    case Tool::Decoder: return "Decoder";
    case Tool::Builder: return "Builder";
    case Tool::KeyGen: return "KeyGen";
    case Tool::Signer: return "Signer";
    case Tool::DeviceBridge: return "DeviceBridge";
  }
  return "Unknown";
}

void ToolInvocation::validate() const {
  if (argv.empty()) throw Error(Errc::BadParams, "tool invocation has an empty argv");
  if (timeout.count() <= 0) throw Error(Errc::BadParams, "tool timeout must be positive");
}

bool executable_on_path(std::string_view program) {
  if (program.find('/') != std::string_view::npos) {
    return ::access(std::string(program).c_str(), X_OK) == 0;
  }
  const char* path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::string_view rest(path);
  while (!rest.empty()) {
    auto colon = rest.find(':');
    auto dir = rest.substr(0, colon);
    auto candidate = fs::path(dir.empty() ? "." : std::string(dir)) / std::string(program);
    if (::access(candidate.c_str(), X_OK) == 0) return true;
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  return false;
}

ToolResult PosixLauncher::launch(const ToolInvocation& invocation) {
  invocation.validate();
  std::vector<std::string> args = invocation.argv;
  std::vector<char*> cargv;
  for (auto& a : args) cargv.push_back(a.data());
  cargv.push_back(nullptr);
  std::string workdir = invocation.workdir.string();

  Pipe in, out, err;
  auto start = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::IoError, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in.read_end(), STDIN_FILENO);
    ::dup2(out.write_end(), STDOUT_FILENO);
    ::dup2(err.write_end(), STDERR_FILENO);
    if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) _exit(126);
    ::execvp(cargv[0], cargv.data());
    static constexpr char kMsg[] = "exec failed: command not found\n";
    [[maybe_unused]] auto n = ::write(STDERR_FILENO, kMsg, sizeof(kMsg) - 1);
    _exit(127);
  }
  in.close_read();
  out.close_write();
  err.close_write();

  // Feed stdin fully before reading; inputs here are small command payloads.
  std::string_view pending(invocation.stdin_data);
  ::signal(SIGPIPE, SIG_IGN);
  while (!pending.empty()) {
    auto n = ::write(in.write_end(), pending.data(), pending.size());
    if (n <= 0) break;
    pending.remove_prefix(static_cast<std::size_t>(n));
  }
  in.close_write();

  ToolResult result;
  auto deadline = start + invocation.timeout;
  std::array<pollfd, 2> fds{{{out.read_end(), POLLIN, 0}, {err.read_end(), POLLIN, 0}}};
  std::array<std::string*, 2> sinks{&result.stdout_data, &result.stderr_data};
  int open_streams = 2;
  std::array<char, 4096> buf{};
  while (open_streams > 0) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      ::kill(pid, SIGKILL);
      break;
    }
    auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    int rc = ::poll(fds.data(), fds.size(), static_cast<int>(std::min<long long>(wait_ms, 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
      auto n = ::read(fds[i].fd, buf.data(), buf.size());
      if (n > 0) {
        sinks[i]->append(buf.data(), static_cast<std::size_t>(n));
      } else {
        fds[i].fd = -1;
        --open_streams;
      }
    }
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

}  // namespace gangmam
