// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace qnc {

inline constexpr const char* kToolName = "qnc";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace qnc
