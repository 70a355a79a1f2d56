/*
 * Copyright 2026 The vecroute Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VECROUTE_ALLOC_HPP_
#define VECROUTE_ALLOC_HPP_

// Process-wide accounting of tensor storage. Every DenseTensor allocates
// through TrackingAllocator, so PeakScope can report the peak number of
// bytes that were live at once while a scope was open, and the largest
// single block requested. Only tensor payloads are counted; shape vectors
// and other bookkeeping are not.
//
// Scopes share one global counter set: opening a scope resets the peak, so
// scopes must not be nested or overlapped across threads.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <memory>
#include <new>

namespace vecroute {

namespace detail {

struct AllocationCounters {
  std::atomic<std::size_t> live{0};
  std::atomic<std::size_t> peak{0};
  std::atomic<std::size_t> largest_block{0};
  std::atomic<std::size_t> allocations{0};
};

inline AllocationCounters& counters() {
  static AllocationCounters c;
  return c;
}

inline void atomic_max(std::atomic<std::size_t>& target, std::size_t value) {
  std::size_t prev = target.load(std::memory_order_relaxed);
  while (prev < value &&
         !target.compare_exchange_weak(prev, value, std::memory_order_relaxed)) {
  }
}

inline void note_allocate(std::size_t bytes) {
  auto& c = counters();
  const std::size_t now = c.live.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  atomic_max(c.peak, now);
  atomic_max(c.largest_block, bytes);
  c.allocations.fetch_add(1, std::memory_order_relaxed);
}

inline void note_deallocate(std::size_t bytes) {
  counters().live.fetch_sub(bytes, std::memory_order_relaxed);
}

}  // namespace detail

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    detail::note_allocate(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    detail::note_deallocate(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept { return true; }
};

/// Bytes of tensor storage currently live in the process.
inline std::size_t live_tensor_bytes() {
  return detail::counters().live.load(std::memory_order_relaxed);
}

// Measures allocations made while the scope is open.
class PeakScope {
 public:
  PeakScope() : baseline_(live_tensor_bytes()) {
    auto& c = detail::counters();
    c.peak.store(baseline_, std::memory_order_relaxed);
    c.largest_block.store(0, std::memory_order_relaxed);
    start_allocations_ = c.allocations.load(std::memory_order_relaxed);
  }

  PeakScope(const PeakScope&) = delete;
  PeakScope& operator=(const PeakScope&) = delete;

  /// Peak bytes above the level that was live when the scope opened.
  std::size_t peak_bytes() const {
    const std::size_t peak = detail::counters().peak.load(std::memory_order_relaxed);
    return peak > baseline_ ? peak - baseline_ : 0;
  }
  std::size_t largest_block_bytes() const {
    return detail::counters().largest_block.load(std::memory_order_relaxed);
  }
  std::size_t allocation_count() const {
    return detail::counters().allocations.load(std::memory_order_relaxed) -
           start_allocations_;
  }

 private:
  std::size_t baseline_;
  std::size_t start_allocations_ = 0;
};

}  // namespace vecroute

#endif  // VECROUTE_ALLOC_HPP_
