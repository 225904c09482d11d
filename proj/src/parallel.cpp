#include "levygreen/parallel.hpp"

#include <cstdlib>
#include <string>

namespace levygreen {

int default_workers()
{
    if (const char* env = std::getenv("LEVYGREEN_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w > 0)
                return w;
        } catch (const std::exception&) {
        }
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

int resolve_workers(int requested)
{
    return requested > 0 ? requested : default_workers();
}

std::uint64_t stream_id(std::uint64_t tag, std::uint64_t index)
{
    std::uint64_t s = tag * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    return splitmix64(s) ^ index;
}

}  // namespace levygreen
