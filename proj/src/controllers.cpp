#include "relsim/controllers.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#include "relsim/parallel.hpp"

extern char** environ;

namespace relsim {

ControllerOracle::ControllerOracle(std::unique_ptr<TwoArgController> controller)
    : controller_(std::move(controller)) {
  if (!controller_) throw std::invalid_argument("ControllerOracle: null controller");
}

std::unique_ptr<ReliabilityOracle> ControllerOracle::replicate() const {
  return std::make_unique<ControllerOracle>(controller_->replicate());
}

// ---- composite ----------------------------------------------------------------

std::string_view to_string(CompositeStrategy s) {
  return s == CompositeStrategy::PerturbState ? "perturb_state" : "perturb_guess";
}

CompositeStrategy parse_composite_strategy(std::string_view name) {
  if (name == "perturb_state" || name == "a") return CompositeStrategy::PerturbState;
  if (name == "perturb_guess" || name == "b") return CompositeStrategy::PerturbGuess;
  throw ConfigError("unknown composite strategy '" + std::string(name) + "'");
}

bool CompositeResult::success() const {
  for (int f : flags) {
    if (f == 1) return true;
  }
  return false;
}

CompositeController::CompositeController(const TwoArgController& base, StateSpace space,
                                         CompositeConfig config)
    : space_(std::move(space)), config_(std::move(config)) {
  if (config_.threads < 2) throw ConfigError("composite controller needs at least two threads");
  space_.validate(config_.radii);
  instances_.reserve(config_.threads);
  for (std::size_t k = 0; k < config_.threads; ++k) instances_.push_back(base.replicate());
}

CompositeController::CompositeController(const CompositeController& other)
    : space_(other.space_), config_(other.config_) {
  instances_.reserve(other.instances_.size());
  for (const auto& c : other.instances_) instances_.push_back(c->replicate());
}

CompositeResult CompositeController::evaluate(const StatePoint& x, const RandomStream& rng) {
  const std::size_t n = config_.threads;
  std::vector<StatePoint> y(n, x);
  for (std::size_t k = 1; k < n; ++k) {
    RandomStream local = rng.substream(k + 1);
    y[k] = perturb(x, config_.radii, space_, local);
  }

  std::vector<ControlResult> results(n);
  std::vector<int> flags(n, 0);
  auto run = [&](std::size_t k, std::size_t) {
    try {
      results[k] = config_.strategy == CompositeStrategy::PerturbState ? instances_[k]->solve(y[k], y[k])
                                                                         : instances_[k]->solve(x, y[k]);
      flags[k] = results[k].success ? 1 : 0;
    } catch (const std::exception&) {
      flags[k] = -1;
    }
  };
  // Each instance is its own replica, so running them side by side is safe.
  parallel_for(n, config_.concurrent ? n : 1, run);

  CompositeResult out;
  out.flags = flags;
  for (int f : flags) out.crashes += f == -1 ? 1 : 0;
  if (out.crashes == n) throw CompositeError("composite controller: all " + std::to_string(n) + " instances crashed");

  std::size_t chosen = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (flags[k] == 1) {
      chosen = k;
      break;
    }
  }
  if (chosen == n) {
    chosen = n - 1;
    while (flags[chosen] == -1) --chosen;
  }
  out.chosen = chosen + 1;
  out.u = std::move(results[chosen].u);
  return out;
}

std::uint64_t hash_point(const StatePoint& x) {
  std::uint64_t h = 0x6a09e667f3bcc909ull ^ x.size();
  for (double v : x.coords()) {
    // -0.0 and 0.0 are the same state.
    const double canon = v == 0.0 ? 0.0 : v;
    h = detail::splitmix64(h ^ std::bit_cast<std::uint64_t>(canon));
  }
  return h;
}

CompositeOracle::CompositeOracle(CompositeController controller, std::uint64_t seed)
    : controller_(std::move(controller)), seed_(seed) {}

std::unique_ptr<ReliabilityOracle> CompositeOracle::replicate() const {
  return std::make_unique<CompositeOracle>(controller_, seed_);
}

RandomStream CompositeOracle::stream_for(const StatePoint& x) const { return RandomStream(seed_, hash_point(x)); }

CompositeResult CompositeOracle::inspect(const StatePoint& x) { return controller_.evaluate(x, stream_for(x)); }

bool CompositeOracle::evaluate(const StatePoint& x) {
  const auto r = controller_.evaluate(x, stream_for(x));
  crashes_ += r.crashes;
  return r.success();
}

// ---- line protocol ---------------------------------------------------------------

std::string format_request(const StatePoint& x) {
  std::string line;
  char buf[32];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int len = std::snprintf(buf, sizeof buf, "%.17g", x[i]);
    if (i > 0) line.push_back(' ');
    line.append(buf, static_cast<std::size_t>(len));
  }
  return line;
}

StatePoint parse_request(std::string_view line, std::size_t dim) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<double> coords;
  coords.reserve(dim);
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + j, v);
    if (ec != std::errc() || ptr != line.data() + j || !std::isfinite(v)) {
      throw ProtocolError("malformed coordinate '" + std::string(line.substr(i, j - i)) + "'");
    }
    coords.push_back(v);
    i = j;
  }
  if (coords.size() != dim) {
    throw ProtocolError("expected " + std::to_string(dim) + " coordinates, got " + std::to_string(coords.size()));
  }
  return StatePoint(std::move(coords));
}

bool parse_response(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line == "1") return true;
  if (line == "0") return false;
  throw ProtocolError("malformed response line '" + std::string(line) + "'");
}

std::uint64_t serve_oracle(ReliabilityOracle& oracle, std::size_t dim, std::istream& in, std::ostream& out) {
  std::uint64_t served = 0;
  std::string line;
  while (std::getline(in, line)) {
    const StatePoint x = parse_request(line, dim);
    out << (oracle(x) ? '1' : '0') << '\n' << std::flush;
    ++served;
  }
  return served;
}

// ---- external process ------------------------------------------------------------

ExternalProcessOracle::ExternalProcessOracle(std::vector<std::string> argv) : argv_(std::move(argv)) {
  if (argv_.empty()) throw ConfigError("external oracle: empty command");
}

ExternalProcessOracle::~ExternalProcessOracle() { stop(); }

std::unique_ptr<ReliabilityOracle> ExternalProcessOracle::replicate() const {
  return std::make_unique<ExternalProcessOracle>(argv_);
}

void ExternalProcessOracle::start() {
  // A child that exits early must surface as a protocol error, not SIGPIPE.
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw OracleError(std::string("external oracle: pipe: ") + std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw OracleError(std::string("external oracle: pipe: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);
  pid_t pid = -1;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    throw OracleError("external oracle: cannot start '" + argv_[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

void ExternalProcessOracle::stop() noexcept {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
  pid_ = -1;
  buffer_.clear();
}

std::string ExternalProcessOracle::read_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[256];
    const ssize_t got = read(from_child_, chunk, sizeof chunk);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) throw ProtocolError("external oracle closed its output without answering");
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

bool ExternalProcessOracle::evaluate(const StatePoint& x) {
  if (pid_ < 0) start();
  const std::string request = format_request(x) + "\n";
  std::size_t sent = 0;
  while (sent < request.size()) {
    const ssize_t n = write(to_child_, request.data() + sent, request.size() - sent);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw ProtocolError("external oracle stopped reading requests");
    }
    sent += static_cast<std::size_t>(n);
  }
  try {
    return parse_response(read_line());
  } catch (...) {
    stop();
    throw;
  }
}

}  // namespace relsim
