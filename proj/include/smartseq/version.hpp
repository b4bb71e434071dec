#pragma once

namespace smartseq {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace smartseq
