#include "mesc/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace mesc {

void parallel_for(size_t n, size_t workers,
                  const std::function<void(size_t, size_t)>& fn) {
  if (n == 0) return;
  workers = std::clamp<size_t>(workers, 1, n);
  if (workers == 1) {
    fn(0, n);
    return;
  }
  const size_t base = n / workers, extra = n % workers;
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  size_t begin = 0;
  for (size_t w = 0; w < workers; ++w) {
    const size_t len = base + (w < extra ? 1 : 0);
    const size_t end = begin + len;
    threads.emplace_back([&, w, begin, end]() {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mesc
