#pragma once

#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>

namespace sage {

/// Counting gate bounding concurrent requests to one endpoint. A plain
/// mutex + condvar instead of std::counting_semaphore because the limit is
/// a runtime value.
class InFlightGate {
 public:
  explicit InFlightGate(std::size_t limit) : available_(limit == 0 ? 1 : limit) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t available_;
};

class InFlightPass {
 public:
  explicit InFlightPass(InFlightGate& gate) : gate_(&gate) { gate_->acquire(); }
  ~InFlightPass() { gate_->release(); }
  InFlightPass(const InFlightPass&) = delete;
  InFlightPass& operator=(const InFlightPass&) = delete;

 private:
  InFlightGate* gate_;
};

/// Shared gate per endpoint, so every client object talking to the same
/// service competes for the same slots. The first caller's limit sticks.
std::shared_ptr<InFlightGate> gate_for_endpoint(const std::string& endpoint,
                                                std::size_t limit);

}  // namespace sage
