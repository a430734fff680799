#include "dfsos/parallel.hpp"

#include <cstdlib>
#include <string>

namespace dfsos {

namespace {

unsigned default_threads() {
    if (const char* env = std::getenv("DFSOS_THREADS")) {
        try {
            const long value = std::stol(env);
            if (value >= 1) return static_cast<unsigned>(value);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{default_threads()};
    return cap;
}

}  // namespace

unsigned max_threads() { return thread_cap().load(); }

void set_max_threads(unsigned threads) { thread_cap().store(std::max(1u, threads)); }

}  // namespace dfsos
