// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace viewvote {

/// Runs fn(0..n-1) across `workers` threads. Order of execution is
/// unspecified; the first exception wins and is rethrown after join.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;

  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::scoped_lock lock(err_mutex);
        if (error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(err_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  int count = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Produces item i on a worker thread, consumes items strictly in index
/// order on the calling thread. The consumption order (and therefore any
/// order-sensitive reduction in `consume`) is independent of the worker
/// count. Look-ahead is bounded so memory stays proportional to workers.
template <typename T>
void ordered_produce_consume(std::size_t n, int workers,
                             const std::function<T(std::size_t)>& produce,
                             const std::function<void(std::size_t, T&&)>& consume) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) consume(i, produce(i));
    return;
  }

  const std::size_t window = static_cast<std::size_t>(workers) * 2 + 2;
  std::mutex mutex;
  std::condition_variable slot_ready, slot_free;
  std::map<std::size_t, T> slots;
  std::size_t next_produce = 0, next_consume = 0;
  std::exception_ptr error;
  bool stopped = false;

  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::unique_lock lock(mutex);
        slot_free.wait(lock, [&] {
          return stopped || next_produce >= n ||
                 next_produce < next_consume + window;
        });
        if (stopped || next_produce >= n) return;
        i = next_produce++;
      }
      try {
        T item = produce(i);
        std::unique_lock lock(mutex);
        slots.emplace(i, std::move(item));
        slot_ready.notify_all();
      } catch (...) {
        std::unique_lock lock(mutex);
        if (!error) error = std::current_exception();
        stopped = true;
        slot_ready.notify_all();
        slot_free.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  int count = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);

  try {
    while (next_consume < n) {
      T item = [&]() {
        std::unique_lock lock(mutex);
        slot_ready.wait(lock, [&] {
          return stopped || slots.count(next_consume) > 0;
        });
        if (stopped && slots.count(next_consume) == 0)
          std::rethrow_exception(error);
        auto node = slots.extract(next_consume);
        return std::move(node.mapped());
      }();
      consume(next_consume, std::move(item));
      {
        std::unique_lock lock(mutex);
        ++next_consume;
        slot_free.notify_all();
      }
    }
  } catch (...) {
    {
      std::unique_lock lock(mutex);
      stopped = true;
      slot_ready.notify_all();
      slot_free.notify_all();
    }
    for (auto& t : pool) t.join();
    throw;
  }
  {
    std::unique_lock lock(mutex);
    stopped = true;
    slot_free.notify_all();
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace viewvote
