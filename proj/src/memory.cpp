#include "aggrbench/memory.hpp"

namespace aggr::memory {

Tracker& Tracker::global() noexcept {
  static Tracker tracker;
  return tracker;
}

void Tracker::on_allocate(std::size_t bytes) {
  const auto limit = limit_.load(std::memory_order_relaxed);
  auto now = current_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  if (limit != 0 && now > limit) {
    current_.fetch_sub(bytes, std::memory_order_relaxed);
    throw OutOfMemoryError(bytes);
  }
  auto peak = peak_.load(std::memory_order_relaxed);
  while (now > peak && !peak_.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

void Tracker::on_release(std::size_t bytes) noexcept { current_.fetch_sub(bytes, std::memory_order_relaxed); }

}  // namespace aggr::memory
