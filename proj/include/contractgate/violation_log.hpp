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

#ifndef CONTRACTGATE_VIOLATION_LOG_HPP
#define CONTRACTGATE_VIOLATION_LOG_HPP

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>

#include "contractgate/monitor.hpp"

namespace contractgate {

/**
 * Appends one JSON line per record. record() never blocks on I/O: lines
 * go through a bounded queue drained by a single writer thread, and when
 * the queue is full the oldest pending line is dropped and counted.
 */
class ViolationLog
{
public:
  // An empty path keeps records in memory only (see lines()).
  explicit ViolationLog(std::filesystem::path path, std::size_t capacity = 1024);
  ~ViolationLog();

  ViolationLog(const ViolationLog&) = delete;
  ViolationLog& operator=(const ViolationLog&) = delete;

  void record(const ViolationRecord& r);

  // Waits until every queued line has been written.
  void flush();

  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t written() const { return written_; }
  // False once a write has failed.
  bool healthy() const { return healthy_; }

  // Lines written so far, oldest first.
  std::vector<std::string> lines() const;

private:
  void run();

  std::filesystem::path path_;
  std::size_t capacity_;
  std::ofstream out_;

  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::condition_variable drained_;
  std::deque<std::string> queue_;
  std::vector<std::string> history_;
  bool busy_ = false;
  bool closing_ = false;

  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<std::uint64_t> written_{0};
  std::atomic<bool> healthy_{true};
  std::thread writer_;
};

} // namespace contractgate

#endif // CONTRACTGATE_VIOLATION_LOG_HPP
