// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/metrics.hpp"

#include "mngp/common.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace mngp {

double psnr(const Image& a, const Image& b) {
    MNGP_EXPECTS(a.same_shape(b), "PSNR needs images of identical shape");
    MNGP_EXPECTS(!a.data.empty(), "PSNR of an empty image");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.data.size());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
    std::array<double, kWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double x = i - kWindow / 2;
        g[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

/// Separable valid-mode filtering of a w x h plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::array<double, kWindow>& g) {
    const int ow = w - kWindow + 1;
    const int oh = h - kWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWindow; ++k) s += g[k] * plane[static_cast<std::size_t>(y) * w + x + k];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWindow; ++k) s += g[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    MNGP_EXPECTS(a.same_shape(b), "SSIM needs images of identical shape");
    MNGP_EXPECTS(a.width >= kWindow && a.height >= kWindow, "image smaller than the 11x11 SSIM window");
    const auto g = gaussian_taps();
    const int w = a.width, h = a.height;
    const std::size_t n = a.pixel_count();
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t p = 0; p < n; ++p) {
            x[p] = a.data[p * a.channels + c];
            y[p] = b.data[p * b.channels + c];
            xx[p] = x[p] * x[p];
            yy[p] = y[p] * y[p];
            xy[p] = x[p] * y[p];
        }
        const auto mx = filter_valid(x, w, h, g);
        const auto my = filter_valid(y, w, h, g);
        const auto sxx = filter_valid(xx, w, h, g);
        const auto syy = filter_valid(yy, w, h, g);
        const auto sxy = filter_valid(xy, w, h, g);
        double sum = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cov = sxy[i] - mx[i] * my[i];
            sum += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
        }
        total += sum / static_cast<double>(mx.size());
    }
    return total / a.channels;
}

}  // namespace mngp
