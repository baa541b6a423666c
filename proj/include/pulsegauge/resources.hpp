#pragma once

#include <filesystem>

namespace pulsegauge {

// Root of the bundled data tree (resources/, models/, demo/, eval/).
// PG_RESOURCES overrides the build-time location.
std::filesystem::path data_dir();

inline std::filesystem::path resource_tables_dir() { return data_dir() / "resources"; }
inline std::filesystem::path default_model_path() { return data_dir() / "models" / "reference_model.json"; }

} // namespace pulsegauge
