// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/image.hpp"

namespace mngp {

inline constexpr double kPsnrCap = 99.0;

/// Peak 1.0; identical images return the 99 dB cap.
double psnr(const Image& a, const Image& b);

/// Gaussian-window SSIM (11x11, sigma 1.5, C1 = 0.01^2, C2 = 0.03^2), valid positions only,
/// averaged over positions and then channels.
double ssim(const Image& a, const Image& b);

}  // namespace mngp
