#include "trajscope/parallel.hpp"

#include <cstdlib>
#include <string>

namespace trajscope {

std::size_t default_thread_count() {
    if (const char* env = std::getenv("TRAJSCOPE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace trajscope
