#include "iotfuzz/inject.hpp"

#include <arpa/inet.h>
#include <errno.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <mutex>
#include <thread>

#include "iotfuzz/codec.hpp"

namespace iotfuzz {

std::string to_string(ExchangeOutcome o) {
  switch (o) {
    case ExchangeOutcome::Responded: return "responded";
    case ExchangeOutcome::Timeout: return "timeout";
    case ExchangeOutcome::ConnectionRefused: return "connection_refused";
    case ExchangeOutcome::Reset: return "reset";
  }
  return "?";
}

namespace {

struct FdGuard {
  int fd;
  ~FdGuard() {
    if (fd >= 0) ::close(fd);
  }
};

// Non-blocking connect with deadline. Returns a connected fd, or -1 with
// *outcome set for target-side failures. Local setup failures throw.
int connect_with_timeout(const TargetSpec& target, ExchangeOutcome* outcome) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string port = std::to_string(target.port);
  int rc = ::getaddrinfo(target.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0)
    throw InjectError("cannot resolve " + target.host + ": " + ::gai_strerror(rc));
  struct AiGuard {
    addrinfo* p;
    ~AiGuard() { ::freeaddrinfo(p); }
  } ai_guard{res};

  int fd = ::socket(res->ai_family, SOCK_STREAM | SOCK_NONBLOCK, 0);
  if (fd < 0) throw InjectError(std::string("socket: ") + std::strerror(errno));

  rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  if (rc < 0 && errno != EINPROGRESS) {
    int err = errno;
    ::close(fd);
    if (err == ECONNREFUSED) {
      *outcome = ExchangeOutcome::ConnectionRefused;
      return -1;
    }
    throw InjectError(std::string("connect: ") + std::strerror(err));
  }
  if (rc < 0) {
    pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, target.connect_timeout_ms);
    if (rc == 0) {
      ::close(fd);
      *outcome = ExchangeOutcome::Timeout;
      return -1;
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      ::close(fd);
      if (err == ECONNREFUSED) *outcome = ExchangeOutcome::ConnectionRefused;
      else if (err == ECONNRESET) *outcome = ExchangeOutcome::Reset;
      else if (err == ETIMEDOUT) *outcome = ExchangeOutcome::Timeout;
      else throw InjectError(std::string("connect: ") + std::strerror(err));
      return -1;
    }
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

bool message_complete(Protocol protocol, const std::string& buf) {
  if (protocol == Protocol::TplinkSmartHome) return tplink_message_length(buf).has_value();
  return http_message_length(buf).has_value();
}

}  // namespace

ExchangeRecord inject_one(const TargetSpec& target, const std::string& bytes,
                          uint32_t mutant_id) {
  ExchangeRecord rec;
  rec.mutant_id = mutant_id;
  rec.sent = bytes;
  auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](ExchangeOutcome outcome) {
    rec.outcome = outcome;
    rec.rtt_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                     .count();
    return rec;
  };

  ExchangeOutcome fail = ExchangeOutcome::Timeout;
  int fd = connect_with_timeout(target, &fail);
  if (fd < 0) return finish(fail);
  FdGuard guard{fd};

  // Write with deadline; the payloads are small but the socket is
  // non-blocking so partial writes are possible.
  size_t written = 0;
  auto write_deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(target.read_timeout_ms);
  while (written < bytes.size()) {
    ssize_t n = ::send(fd, bytes.data() + written, bytes.size() - written, MSG_NOSIGNAL);
    if (n > 0) {
      written += static_cast<size_t>(n);
      continue;
    }
    if (n < 0 && (errno == ECONNRESET || errno == EPIPE)) return finish(ExchangeOutcome::Reset);
    if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)
      throw InjectError(std::string("send: ") + std::strerror(errno));
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                    write_deadline - std::chrono::steady_clock::now())
                    .count();
    if (left <= 0) return finish(ExchangeOutcome::Timeout);
    pollfd pfd{fd, POLLOUT, 0};
    ::poll(&pfd, 1, static_cast<int>(left));
  }

  auto read_deadline = std::chrono::steady_clock::now() +
                       std::chrono::milliseconds(target.read_timeout_ms);
  char chunk[4096];
  while (true) {
    if (message_complete(target.protocol, rec.response))
      return finish(ExchangeOutcome::Responded);
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                    read_deadline - std::chrono::steady_clock::now())
                    .count();
    if (left <= 0)
      return finish(rec.response.empty() ? ExchangeOutcome::Timeout : ExchangeOutcome::Responded);
    pollfd pfd{fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(left));
    if (rc == 0) continue;
    ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n > 0) {
      rec.response.append(chunk, static_cast<size_t>(n));
      continue;
    }
    if (n == 0) {
      // Peer closed: whatever arrived is the response; nothing is a drop.
      return finish(rec.response.empty() ? ExchangeOutcome::Timeout : ExchangeOutcome::Responded);
    }
    if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
    if (errno == ECONNRESET)
      return finish(rec.response.empty() ? ExchangeOutcome::Reset : ExchangeOutcome::Responded);
    throw InjectError(std::string("recv: ") + std::strerror(errno));
  }
}

std::vector<ExchangeRecord> run_campaign(const TargetSpec& target,
                                         const std::vector<MutantRequest>& mutants) {
  std::vector<ExchangeRecord> results(mutants.size());
  if (mutants.empty()) return results;
  int parallel = std::max(1, target.max_parallel);

  std::mutex mu;
  size_t next = 0;
  auto last_start = std::chrono::steady_clock::now() -
                    std::chrono::milliseconds(target.pacing_ms);
  std::exception_ptr error;

  auto worker = [&] {
    while (true) {
      size_t idx;
      {
        std::unique_lock<std::mutex> lock(mu);
        if (error || next >= mutants.size()) return;
        idx = next++;
        // Pacing gates connection starts globally across workers.
        auto start_at = last_start + std::chrono::milliseconds(target.pacing_ms);
        last_start = std::max(start_at, std::chrono::steady_clock::now());
        auto wake = last_start;
        lock.unlock();
        std::this_thread::sleep_until(wake);
      }
      try {
        results[idx] = inject_one(target, mutants[idx].bytes, mutants[idx].mutant_id);
        results[idx].structure_risk = mutants[idx].structure_risk;
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  int count = std::min<size_t>(parallel, mutants.size());
  for (int i = 0; i < count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace iotfuzz
