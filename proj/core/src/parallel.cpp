#include "coxflux/parallel.hpp"

#include <cstdlib>
#include <string>

namespace coxflux {

unsigned resolve_workers(int flag_value) {
    if (flag_value > 0) return static_cast<unsigned>(flag_value);
    if (const char* env = std::getenv("COXFLUX_WORKERS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

}  // namespace coxflux
