#pragma once

#include <atomic>
#include <cstddef>
#include <limits>
#include <new>
#include <vector>

#include "aggrbench/error.hpp"

namespace aggr::memory {

// Process-wide accounting of auxiliary buffers. Only storage that goes through
// TrackingAllocator is counted; graph topology is not.
class Tracker {
 public:
  static Tracker& global() noexcept;

  void on_allocate(std::size_t bytes);
  void on_release(std::size_t bytes) noexcept;

  std::size_t current() const noexcept { return current_.load(std::memory_order_relaxed); }
  std::size_t peak() const noexcept { return peak_.load(std::memory_order_relaxed); }

  void reset_peak() noexcept { peak_.store(current(), std::memory_order_relaxed); }

  // Total tracked bytes allowed to be live at once; 0 disables the budget.
  void set_limit(std::size_t bytes) noexcept { limit_.store(bytes, std::memory_order_relaxed); }
  std::size_t limit() const noexcept { return limit_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::size_t> current_{0};
  std::atomic<std::size_t> peak_{0};
  std::atomic<std::size_t> limit_{0};
};

template <class T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <class U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) {
      throw OutOfMemoryError(std::numeric_limits<std::size_t>::max());
    }
    const std::size_t bytes = n * sizeof(T);
    Tracker::global().on_allocate(bytes);
    try {
      return static_cast<T*>(::operator new(bytes));
    } catch (const std::bad_alloc&) {
      Tracker::global().on_release(bytes);
      throw OutOfMemoryError(bytes);
    }
  }

  void deallocate(T* p, std::size_t n) noexcept {
    ::operator delete(p);
    Tracker::global().on_release(n * sizeof(T));
  }

  template <class U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
using tracked_vector = std::vector<T, TrackingAllocator<T>>;

// Measures the peak of tracked bytes allocated after construction, relative to
// what was already live.
class PeakScope {
 public:
  PeakScope() noexcept : baseline_(Tracker::global().current()) { Tracker::global().reset_peak(); }

  std::size_t peak_bytes() const noexcept {
    const auto peak = Tracker::global().peak();
    return peak > baseline_ ? peak - baseline_ : 0;
  }

 private:
  std::size_t baseline_;
};

// Installs a memory budget for the lifetime of the guard.
class LimitGuard {
 public:
  explicit LimitGuard(std::size_t bytes) noexcept : previous_(Tracker::global().limit()) {
    Tracker::global().set_limit(bytes);
  }
  ~LimitGuard() { Tracker::global().set_limit(previous_); }
  LimitGuard(const LimitGuard&) = delete;
  LimitGuard& operator=(const LimitGuard&) = delete;

 private:
  std::size_t previous_;
};

}  // namespace aggr::memory
