#include "cpalab/parallel.h"

#include <cstdlib>
#include <string>

namespace cpalab {

unsigned resolve_threads(unsigned requested) {
    if (requested > 0)
        return requested;
    if (const char *env = std::getenv("CPA_PARALLAB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<unsigned>(v);
        } catch (const std::exception &) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace cpalab
