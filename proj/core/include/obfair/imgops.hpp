#pragma once

#include <vector>

#include "obfair/image.hpp"

namespace obfair {

/// Normalized 1-D Gaussian kernel of odd size k >= 3, with
/// sigma = 0.3*((k-1)/2 - 1) + 0.8 (the usual size-to-sigma convention).
std::vector<double> gaussian_kernel(int k);

/// Separable Gaussian blur of the box region; pixels outside are untouched.
/// Convolution runs horizontally then vertically in double precision and
/// rounds half up to 8 bit once at the end. Samples past the ROI edge are
/// mirrored (symmetric reflection, period 2*extent), so arbitrarily large
/// kernels stay well defined and nothing outside the face leaks in.
ImageBuffer blur_roi(const ImageBuffer& img, const FaceBox& box, int k);

/// Pixelate the box region: area-average downsample so that max(w,h) -> s
/// (aspect preserved, each target dimension >= 1), then bilinear upsample
/// back to (w,h). Each resize rounds half up to 8 bit, mirroring the usual
/// two-pass resize pipeline. s = roi_size leaves the ROI bit-identical.
ImageBuffer pixelate_roi(const ImageBuffer& img, const FaceBox& box, int s);

} // namespace obfair
