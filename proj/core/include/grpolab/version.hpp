#pragma once

namespace grpolab {

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace grpolab
