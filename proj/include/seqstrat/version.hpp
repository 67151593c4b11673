#pragma once

namespace seqstrat {

inline constexpr const char* kToolName = "seqstrat";
inline constexpr const char* kVersion = "0.1.0";

} // namespace seqstrat
