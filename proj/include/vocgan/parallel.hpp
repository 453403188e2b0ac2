#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace vocgan {

namespace par_detail {
// True on pool workers and on a leader thread inside a parallel section;
// nested parallel helpers then run inline instead of re-entering the pool.
inline bool& busy_flag() {
  thread_local bool busy = false;
  return busy;
}
}  // namespace par_detail

// Fork-join worker pool for intra-kernel parallelism. Work is split into one
// contiguous chunk per worker with a fixed partition, so every output element
// is produced by exactly one thread in the same accumulation order no matter
// how many threads run; results are bitwise independent of the thread count.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  ~ThreadPool() { shutdown(); }

  void resize(int n) {
    if (n < 1) n = 1;
    std::unique_lock<std::mutex> lk(control_);
    if (n == size_) return;
    shutdown_locked();
    size_ = n;
    stop_ = false;
    for (int i = 1; i < size_; ++i) {
      workers_.emplace_back([this, i] { worker_loop(i); });
    }
  }

  int size() const { return size_; }

  // Runs body(begin, end) over a partition of [0, n). The calling thread
  // executes chunk 0 and blocks until all chunks finish.
  void run(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (n <= 0) return;
    std::unique_lock<std::mutex> lk(control_);
    int parts = size_;
    if (static_cast<std::int64_t>(parts) > n) parts = static_cast<int>(n);
    if (parts <= 1) {
      body(0, n);
      return;
    }
    {
      std::unique_lock<std::mutex> jk(job_mutex_);
      job_ = &body;
      job_n_ = n;
      job_parts_ = parts;
      pending_ = parts - 1;
      ++epoch_;
    }
    cv_work_.notify_all();
    run_chunk(0, body);
    std::unique_lock<std::mutex> jk(job_mutex_);
    cv_done_.wait(jk, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  ThreadPool() : size_(1) {}

  void run_chunk(int idx, const std::function<void(std::int64_t, std::int64_t)>& body) {
    std::int64_t chunk = (job_n_ + job_parts_ - 1) / job_parts_;
    std::int64_t begin = idx * chunk;
    std::int64_t end = begin + chunk;
    if (end > job_n_) end = job_n_;
    if (begin < end) body(begin, end);
  }

  void worker_loop(int idx) {
    par_detail::busy_flag() = true;
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::int64_t, std::int64_t)>* job = nullptr;
      {
        std::unique_lock<std::mutex> jk(job_mutex_);
        cv_work_.wait(jk, [&] { return stop_ || (job_ && epoch_ != seen && idx < job_parts_); });
        if (stop_) return;
        seen = epoch_;
        job = job_;
      }
      run_chunk(idx, *job);
      {
        std::unique_lock<std::mutex> jk(job_mutex_);
        if (--pending_ == 0) cv_done_.notify_all();
      }
    }
  }

  void shutdown() {
    std::unique_lock<std::mutex> lk(control_);
    shutdown_locked();
  }

  void shutdown_locked() {
    {
      std::unique_lock<std::mutex> jk(job_mutex_);
      stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& w : workers_) {
      if (w.joinable()) w.join();
    }
    workers_.clear();
  }

  std::mutex control_;  // serializes run()/resize() callers
  std::mutex job_mutex_;
  std::condition_variable cv_work_, cv_done_;
  std::vector<std::thread> workers_;
  const std::function<void(std::int64_t, std::int64_t)>* job_ = nullptr;
  std::int64_t job_n_ = 0;
  int job_parts_ = 0;
  int pending_ = 0;
  std::uint64_t epoch_ = 0;
  bool stop_ = false;
  int size_ = 1;
};

inline int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

inline void set_threads(int n) {
  ThreadPool::instance().resize(n <= 0 ? hardware_threads() : n);
}

inline int threads() { return ThreadPool::instance().size(); }

// body(i) for every i in [0, n), partitioned into contiguous per-thread
// chunks. Nested calls run inline on the calling thread.
template <typename F>
void parallel_for(std::int64_t n, F&& body) {
  if (n <= 0) return;
  if (par_detail::busy_flag() || threads() <= 1 || n == 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  par_detail::busy_flag() = true;
  std::function<void(std::int64_t, std::int64_t)> chunk = [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) body(i);
  };
  ThreadPool::instance().run(n, chunk);
  par_detail::busy_flag() = false;
}

// body(begin, end) over contiguous chunks of [0, n); for cheap elementwise
// work that only pays off on large extents.
template <typename F>
void parallel_ranges(std::int64_t n, F&& body) {
  if (n <= 0) return;
  if (par_detail::busy_flag() || threads() <= 1 || n < (1 << 15)) {
    body(0, n);
    return;
  }
  par_detail::busy_flag() = true;
  std::function<void(std::int64_t, std::int64_t)> chunk = [&](std::int64_t b, std::int64_t e) {
    body(b, e);
  };
  ThreadPool::instance().run(n, chunk);
  par_detail::busy_flag() = false;
}

}  // namespace vocgan
