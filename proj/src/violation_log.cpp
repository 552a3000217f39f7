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

#include "contractgate/violation_log.hpp"

namespace contractgate {

ViolationLog::ViolationLog(std::filesystem::path path, std::size_t capacity)
  : path_(std::move(path)), capacity_(capacity == 0 ? 1 : capacity)
{
  if (!path_.empty()) {
    out_.open(path_, std::ios::app);
    if (!out_) {
      healthy_ = false;
    }
  }
  writer_ = std::thread([this] { run(); });
}

ViolationLog::~ViolationLog()
{
  {
    std::lock_guard<std::mutex> lock(mutex_);
    closing_ = true;
  }
  ready_.notify_all();
  writer_.join();
}

void ViolationLog::record(const ViolationRecord& r)
{
  std::string line = r.to_json().dump();
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(std::move(line));
  }
  ready_.notify_one();
}

void ViolationLog::flush()
{
  std::unique_lock<std::mutex> lock(mutex_);
  drained_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

std::vector<std::string> ViolationLog::lines() const
{
  std::lock_guard<std::mutex> lock(mutex_);
  return history_;
}

void ViolationLog::run()
{
  std::unique_lock<std::mutex> lock(mutex_);
  for (;;) {
    ready_.wait(lock, [this] { return closing_ || !queue_.empty(); });
    if (queue_.empty()) {
      if (closing_) {
        break;
      }
      continue;
    }
    std::string line = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;
    lock.unlock();

    if (out_.is_open()) {
      out_ << line << '\n';
      out_.flush();
      if (!out_) {
        healthy_ = false;
      }
    }
    ++written_;

    lock.lock();
    history_.push_back(std::move(line));
    busy_ = false;
    if (queue_.empty()) {
      drained_.notify_all();
    }
  }
  drained_.notify_all();
}

} // namespace contractgate
