#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>

#include "tolalloc/evaluator.hpp"
#include "tolalloc/io.hpp"

namespace tolalloc {

struct ExternalEvaluator::Process {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  int err_child = -1;
  std::string pending;  // stdout bytes past the last full line
  std::string stderr_text;
  bool dead = false;
  std::mutex mutex;

  ~Process() { shutdown(); }

  void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }

  void shutdown() {
    close_fd(to_child);
    if (pid > 0) {
      // Give the child a moment to exit on EOF before killing it.
      int status = 0;
      for (int k = 0; k < 50; ++k) {
        if (::waitpid(pid, &status, WNOHANG) == pid) {
          pid = -1;
          break;
        }
        ::usleep(2000);
      }
      if (pid > 0) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        pid = -1;
      }
    }
    close_fd(from_child);
    close_fd(err_child);
  }

  void drain_stderr() {
    if (err_child < 0) return;
    char buf[4096];
    while (true) {
      const ssize_t k = ::read(err_child, buf, sizeof(buf));
      if (k <= 0) break;
      if (stderr_text.size() < 65536) stderr_text.append(buf, static_cast<std::size_t>(k));
    }
  }

  std::string exit_description() {
    if (pid <= 0) return "child not running";
    int status = 0;
    ::close(to_child);
    to_child = -1;
    pid_t r = ::waitpid(pid, &status, 0);
    pid = -1;
    if (r <= 0) return "child state unknown";
    if (WIFEXITED(status)) return "child exited with status " + std::to_string(WEXITSTATUS(status));
    if (WIFSIGNALED(status)) return "child killed by signal " + std::to_string(WTERMSIG(status));
    return "child stopped";
  }

  [[noreturn]] void fail(const std::string& what) {
    drain_stderr();
    std::string diag = what;
    if (!stderr_text.empty()) diag += "; stderr: " + stderr_text;
    dead = true;
    throw EvaluatorError("external evaluator: " + diag, pending + stderr_text);
  }
};

namespace {
void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}
}  // namespace

ExternalEvaluator::ExternalEvaluator(const ExternalSpec& spec) : spec_(spec), proc_(std::make_unique<Process>()) {
  if (spec_.dim < 1) throw PreconditionError("external evaluator: dim must be >= 1");
  if (spec_.command.empty()) throw PreconditionError("external evaluator: empty command");
  if (!(spec_.timeout_seconds > 0.0)) throw PreconditionError("external evaluator: timeout must be > 0");
  // A dead child must surface as EPIPE, not terminate us.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) {
    throw EvaluatorError("external evaluator: pipe() failed: " + std::string(std::strerror(errno)));
  }
  // Exec failure is reported through a close-on-exec pipe.
  int exec_pipe[2];
  if (::pipe(exec_pipe) != 0) throw EvaluatorError("external evaluator: pipe() failed");
  ::fcntl(exec_pipe[1], F_SETFD, FD_CLOEXEC);

  const pid_t pid = ::fork();
  if (pid < 0) throw EvaluatorError("external evaluator: fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1], exec_pipe[0]}) {
      ::close(fd);
    }
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(spec_.command.c_str()));
    for (const auto& a : spec_.args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    const int err = errno;
    [[maybe_unused]] ssize_t w = ::write(exec_pipe[1], &err, sizeof(err));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(exec_pipe[1]);
  int exec_errno = 0;
  const ssize_t got = ::read(exec_pipe[0], &exec_errno, sizeof(exec_errno));
  ::close(exec_pipe[0]);

  proc_->pid = pid;
  proc_->to_child = in_pipe[1];
  proc_->from_child = out_pipe[0];
  proc_->err_child = err_pipe[0];
  set_nonblocking(proc_->from_child);
  set_nonblocking(proc_->err_child);
  if (got == static_cast<ssize_t>(sizeof(exec_errno))) {
    proc_->shutdown();
    throw EvaluatorError("external evaluator: cannot execute '" + spec_.command +
                         "': " + std::strerror(exec_errno));
  }
}

ExternalEvaluator::~ExternalEvaluator() = default;

double ExternalEvaluator::value(const Eigen::Ref<const Vector>& mu) const {
  check_dim(mu.size(), spec_.dim, "external evaluator");
  Process& p = *proc_;
  std::lock_guard<std::mutex> lock(p.mutex);
  if (p.dead) throw EvaluatorError("external evaluator: child is no longer usable");

  std::string request;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (i) request += ' ';
    request += format_double(mu(i));
  }
  request += '\n';
  std::size_t off = 0;
  while (off < request.size()) {
    const ssize_t w = ::write(p.to_child, request.data() + off, request.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      p.fail("write failed (" + std::string(std::strerror(errno)) + "), " + p.exit_description());
    }
    off += static_cast<std::size_t>(w);
  }

  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(spec_.timeout_seconds);
  while (p.pending.find('\n') == std::string::npos) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (remaining <= 0) {
      ::kill(p.pid, SIGKILL);
      p.fail("timed out after " + format_double(spec_.timeout_seconds) + " s");
    }
    pollfd fds[2] = {{p.from_child, POLLIN, 0}, {p.err_child, POLLIN, 0}};
    const int r = ::poll(fds, 2, static_cast<int>(std::min<long long>(remaining, 1000)));
    if (r < 0) {
      if (errno == EINTR) continue;
      p.fail("poll failed");
    }
    if (fds[1].revents & POLLIN) p.drain_stderr();
    if (fds[0].revents & (POLLIN | POLLHUP)) {
      char buf[4096];
      const ssize_t k = ::read(p.from_child, buf, sizeof(buf));
      if (k > 0) {
        p.pending.append(buf, static_cast<std::size_t>(k));
      } else if (k == 0) {
        p.fail("unexpected end of output, " + p.exit_description());
      } else if (errno != EAGAIN && errno != EINTR) {
        p.fail("read failed");
      }
    }
  }
  const std::size_t nl = p.pending.find('\n');
  const std::string line = p.pending.substr(0, nl);
  p.pending.erase(0, nl + 1);
  try {
    return parse_double(line);
  } catch (const ParseError&) {
    p.dead = true;
    throw EvaluatorError("external evaluator: non-numeric response '" + line + "'", line);
  }
}

}  // namespace tolalloc
