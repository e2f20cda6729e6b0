#include "iob/common.hpp"

#include <algorithm>
#include <thread>

namespace iob {

unsigned default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

void parallel_chunks(Index n, unsigned n_threads, const std::function<void(Index, Index)>& fn) {
    if (n == 0) return;
    unsigned workers = std::min<unsigned>(n_threads == 0 ? 1 : n_threads,
                                          static_cast<unsigned>(std::min<Index>(n, 256)));
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    Index chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        Index begin = static_cast<Index>(w) * chunk;
        Index end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(fn, begin, end);
    }
    for (auto& t : pool) t.join();
}

}  // namespace iob
