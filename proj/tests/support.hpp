#pragma once

#include <httplib.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "promptevo/config.hpp"
#include "promptevo/rng.hpp"
#include "promptevo/schema.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("promptevo-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// Pearson statistic of observed counts against expected probabilities.
/// Cells with zero expectation must have zero observations (otherwise +inf).
inline double chi_square_statistic(const std::vector<long>& observed, const std::vector<double>& expected_p) {
  long total = 0;
  for (long o : observed) total += o;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_p[i] * static_cast<double>(total);
    if (e == 0.0) {
      if (observed[i] != 0) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double d = static_cast<double>(observed[i]) - e;
    stat += d * d / e;
  }
  return stat;
}

/// Upper critical value of chi-square with `df` degrees of freedom.
inline double chi_square_critical(double df, double alpha = 0.001) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(df), alpha));
}

inline std::size_t positive_cells(const std::vector<double>& p) {
  std::size_t n = 0;
  for (double x : p)
    if (x > 0.0) ++n;
  return n;
}

/// Passes iff the counts are consistent with `expected_p` at significance `alpha`.
inline bool chi_square_ok(const std::vector<long>& observed, const std::vector<double>& expected_p,
                          double alpha = 0.001) {
  const double df = static_cast<double>(positive_cells(expected_p)) - 1.0;
  return chi_square_statistic(observed, expected_p) <= chi_square_critical(df, alpha);
}

/// Random valid schema: 1..6 attributes of random kinds, names a0..a5.
inline promptevo::AttributeSchema random_schema(promptevo::Rng& rng) {
  using namespace promptevo;
  AttributeSchema s;
  s.version = "1.0";
  s.style_keyword = "style" + std::to_string(rng.below(100));
  const std::size_t count = 1 + rng.below(6);
  for (std::size_t i = 0; i < count; ++i) {
    AttributeDef a;
    a.name = "a" + std::to_string(i);
    a.kind = static_cast<AttributeKind>(rng.below(3));
    if (a.kind == AttributeKind::continuous) {
      a.range.lo = -5.0 + 10.0 * rng.uniform();
      a.range.hi = a.range.lo + 0.1 + 9.9 * rng.uniform();
      a.pole_labels = {"low" + std::to_string(i), "high" + std::to_string(i)};
      a.lora_name = "adapter_" + std::to_string(i);
      a.dual_adapter = rng.bernoulli(0.3);
    } else {
      const std::size_t n = 2 + rng.below(7);
      for (std::size_t v = 0; v < n; ++v) a.values.push_back("v" + std::to_string(i) + "_" + std::to_string(v));
      if (a.kind == AttributeKind::multi_discrete) a.select_count = 1 + rng.below(n - 1);
    }
    s.attributes.push_back(std::move(a));
  }
  return s;
}

/// Random valid GA config with a small population.
inline promptevo::GAConfig random_config(promptevo::Rng& rng) {
  promptevo::GAConfig c;
  c.population_size = 2 + rng.below(15);
  c.crossover_gene_probability = 0.05 + 0.9 * rng.uniform();
  c.mutation_rate = 0.5 * rng.uniform();
  c.elitism_count = rng.below(c.population_size);
  c.seed_range_upper = 1 + static_cast<std::int64_t>(rng.below(promptevo::kSeedUpperBound));
  return c;
}

/// Recorded HTTP request seen by a StubServer.
struct SeenRequest {
  std::string method;
  std::string path;
  std::string body;
  std::string content_type;
};

/// Local HTTP server on a free port for wire-contract tests.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call_index)>;

  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      int index;
      {
        std::lock_guard lock(mutex_);
        index = static_cast<int>(seen_.size());
        seen_.push_back({req.method, req.path, req.body, req.get_header_value("Content-Type")});
      }
      handler_(req, res, index);
    };
    server_.Post(R"(/.*)", route);
    server_.Get(R"(/.*)", route);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::vector<SeenRequest> seen() const {
    std::lock_guard lock(mutex_);
    return seen_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mutex_;
  std::vector<SeenRequest> seen_;
};

/// A local port with nothing listening on it (bound once, then closed).
inline int unused_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

/// Runs a shell command and returns {exit status, stdout}.
inline std::pair<int, std::string> run_command(const std::string& command) {
  std::string out;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) return {-1, {}};
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

inline std::string cli(const std::string& args) { return std::string(PROMPTEVO_CLI) + " " + args; }

inline fs::path source_path(const std::string& relative) { return fs::path(PROMPTEVO_SOURCE_DIR) / relative; }

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace testing
