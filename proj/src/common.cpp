// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/common.hpp"

#include <algorithm>
#include <sstream>

namespace mngp {

void contract_failure(const char* cond, const std::string& msg, const char* file, int line) {
    std::ostringstream os;
    os << file << ":" << line << ": contract violated (" << cond << ")";
    if (!msg.empty()) os << ": " << msg;
    throw ContractViolation(os.str());
}

float round_to_half(float x) {
    constexpr float kHalfMax = 65504.0f;
    x = std::clamp(x, -kHalfMax, kHalfMax);
    return static_cast<float>(Eigen::half(x));
}

}  // namespace mngp
