#include "pulsegauge/resources.hpp"

#include <cstdlib>

#ifndef PULSEGAUGE_RESOURCE_DIR
#define PULSEGAUGE_RESOURCE_DIR "data"
#endif

namespace pulsegauge {

std::filesystem::path data_dir()
{
    if (const char* env = std::getenv("PG_RESOURCES"); env && *env)
        return env;
    return PULSEGAUGE_RESOURCE_DIR;
}

} // namespace pulsegauge
