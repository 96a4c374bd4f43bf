#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "solvers.hpp"
#include "xtalk/error.hpp"

namespace xtalk::detail {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_command(const std::string& command) {
  std::istringstream in(command);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string find_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) return access(name.c_str(), X_OK) == 0 ? name : "";
  const char* path = std::getenv("PATH");
  if (!path) return "";
  std::istringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    fs::path candidate = fs::path(dir) / name;
    if (access(candidate.c_str(), X_OK) == 0) return candidate.string();
  }
  return "";
}

class TempFile {
 public:
  explicit TempFile(const std::string& suffix) {
    std::string pattern = (fs::temp_directory_path() / ("xtalk-XXXXXX" + suffix)).string();
    std::vector<char> buf(pattern.begin(), pattern.end());
    buf.push_back('\0');
    int fd = mkstemps(buf.data(), static_cast<int>(suffix.size()));
    if (fd < 0) throw SolverError("cannot create temporary file");
    close(fd);
    path_ = buf.data();
  }
  ~TempFile() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Runs argv with stdout and stderr redirected; returns the exit status.
int run_process(const std::vector<std::string>& argv, const std::string& stdout_path, double timeout_s) {
  pid_t pid = fork();
  if (pid < 0) throw SolverError("fork failed");
  if (pid == 0) {
    int fd = open(stdout_path.c_str(), O_WRONLY | O_TRUNC);
    if (fd >= 0) {
      dup2(fd, STDOUT_FILENO);
      dup2(fd, STDERR_FILENO);
      close(fd);
    }
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execv(args[0], args.data());
    _exit(127);
  }
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  int status = 0;
  while (true) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw SolverError("waitpid failed");
    if (timeout_s > 0 && std::chrono::steady_clock::now() > deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw SolverError("external solver timed out after " + std::to_string(timeout_s) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

}  // namespace

Schedule solve_smtlib(const OptimizationProblem& problem, const SolveOptions& options) {
  auto argv = split_command(options.solver_cmd);
  if (argv.empty()) throw SolverError("no solver command configured");
  std::string exe = find_executable(argv[0]);
  if (exe.empty()) throw SolverError("solver '" + argv[0] + "' not found");
  argv[0] = exe;

  auto begin = std::chrono::steady_clock::now();
  TempFile input(".smt2");
  TempFile output(".out");
  {
    std::ofstream out(input.path());
    out << emit_smtlib(problem);
  }
  argv.push_back(input.path());
  int code = run_process(argv, output.path(), options.timeout_s);
  std::string text = read_file(output.path());
  if (code != 0) {
    throw SolverError("solver exited with status " + std::to_string(code) + ": " + text.substr(0, 400));
  }
  auto starts = parse_smt_model(text, problem.model->size());

  SolverStats stats;
  stats.backend = "smtlib";
  stats.solve_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return make_schedule(*problem.model, std::move(starts), problem.omega, "xtalk", true, stats);
}

}  // namespace xtalk::detail
