#include "obfair/imgops.hpp"

#include <algorithm>
#include <cmath>

namespace obfair {

namespace {

// Mirror index into [0, n) with period 2n: ... 2 1 0 | 0 1 2 ... n-1 | n-1 ... 1 0 | 0 1 ...
int reflect_index(long long i, int n) {
    if (n == 1) return 0;
    const long long period = 2LL * n;
    long long m = i % period;
    if (m < 0) m += period;
    return static_cast<int>(m < n ? m : period - 1 - m);
}

std::uint8_t round_u8(double v) {
    double r = std::floor(v + 0.5);
    if (r < 0.0) r = 0.0;
    if (r > 255.0) r = 255.0;
    return static_cast<std::uint8_t>(r);
}

void check_box(const ImageBuffer& img, const FaceBox& box) {
    img.validate();
    if (!box.valid_for(img)) throw ImageError("face box out of image bounds");
}

} // namespace

std::vector<double> gaussian_kernel(int k) {
    if (k < 3 || k % 2 == 0)
        throw ImageError("gaussian kernel size must be odd and >= 3");
    const double sigma = 0.3 * ((k - 1) / 2.0 - 1.0) + 0.8;
    const double center = (k - 1) / 2.0;
    std::vector<double> g(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        double d = i - center;
        g[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (double& w : g) w /= sum;
    return g;
}

ImageBuffer blur_roi(const ImageBuffer& img, const FaceBox& box, int k) {
    check_box(img, box);
    const std::vector<double> g = gaussian_kernel(k);
    const int radius = (k - 1) / 2;
    const int bw = box.w, bh = box.h, ch = img.channels;

    // ROI-local float planes, interleaved like the source.
    std::vector<double> tmp(static_cast<std::size_t>(bw) * bh * ch);
    std::vector<double> out(tmp.size());

    auto src = [&](int bx, int by, int c) -> double {
        return img.at(box.x + bx, box.y + by, c);
    };

    // Horizontal pass, reflecting at the ROI edges.
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int t = 0; t < k; ++t) {
                    int sx = reflect_index(static_cast<long long>(bx) + t - radius, bw);
                    acc += g[t] * src(sx, by, c);
                }
                tmp[(static_cast<std::size_t>(by) * bw + bx) * ch + c] = acc;
            }

    // Vertical pass on the float intermediate.
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int t = 0; t < k; ++t) {
                    int sy = reflect_index(static_cast<long long>(by) + t - radius, bh);
                    acc += g[t] * tmp[(static_cast<std::size_t>(sy) * bw + bx) * ch + c];
                }
                out[(static_cast<std::size_t>(by) * bw + bx) * ch + c] = acc;
            }

    ImageBuffer result = img;
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx)
            for (int c = 0; c < ch; ++c)
                result.at(box.x + bx, box.y + by, c) =
                    round_u8(out[(static_cast<std::size_t>(by) * bw + bx) * ch + c]);
    return result;
}

namespace {

// Area-average resize of a ROI-local u8 plane set. Exact block averaging
// whenever the scale is integral.
ImageBuffer resize_area(const ImageBuffer& roi, int tw, int th) {
    ImageBuffer out(tw, th, roi.channels);
    const double sx = static_cast<double>(roi.width) / tw;
    const double sy = static_cast<double>(roi.height) / th;
    for (int ty = 0; ty < th; ++ty) {
        const double y0 = ty * sy, y1 = (ty + 1) * sy;
        for (int tx = 0; tx < tw; ++tx) {
            const double x0 = tx * sx, x1 = (tx + 1) * sx;
            for (int c = 0; c < roi.channels; ++c) {
                double acc = 0.0;
                for (int py = static_cast<int>(std::floor(y0));
                     py < static_cast<int>(std::ceil(y1)); ++py) {
                    const double wy =
                        std::min<double>(py + 1, y1) - std::max<double>(py, y0);
                    if (wy <= 0.0) continue;
                    for (int px = static_cast<int>(std::floor(x0));
                         px < static_cast<int>(std::ceil(x1)); ++px) {
                        const double wx =
                            std::min<double>(px + 1, x1) - std::max<double>(px, x0);
                        if (wx <= 0.0) continue;
                        acc += wx * wy * roi.at(px, py, c);
                    }
                }
                out.at(tx, ty, c) = round_u8(acc / ((x1 - x0) * (y1 - y0)));
            }
        }
    }
    return out;
}

// Bilinear resize with half-pixel-center alignment; identity when sizes match.
ImageBuffer resize_bilinear(const ImageBuffer& src, int tw, int th) {
    ImageBuffer out(tw, th, src.channels);
    const double sx = static_cast<double>(src.width) / tw;
    const double sy = static_cast<double>(src.height) / th;
    for (int ty = 0; ty < th; ++ty) {
        double fy = (ty + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double dy = fy - y0;
        int ya = std::clamp(y0, 0, src.height - 1);
        int yb = std::clamp(y0 + 1, 0, src.height - 1);
        for (int tx = 0; tx < tw; ++tx) {
            double fx = (tx + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double dx = fx - x0;
            int xa = std::clamp(x0, 0, src.width - 1);
            int xb = std::clamp(x0 + 1, 0, src.width - 1);
            for (int c = 0; c < src.channels; ++c) {
                double v = (1 - dy) * ((1 - dx) * src.at(xa, ya, c) + dx * src.at(xb, ya, c)) +
                           dy * ((1 - dx) * src.at(xa, yb, c) + dx * src.at(xb, yb, c));
                out.at(tx, ty, c) = round_u8(v);
            }
        }
    }
    return out;
}

} // namespace

ImageBuffer pixelate_roi(const ImageBuffer& img, const FaceBox& box, int s) {
    check_box(img, box);
    const int roi = box.roi_size();
    if (s < 1 || s > roi)
        throw ImageError("pixelation target size out of [1, roi_size]");

    ImageBuffer patch(box.w, box.h, img.channels);
    for (int by = 0; by < box.h; ++by)
        for (int bx = 0; bx < box.w; ++bx)
            for (int c = 0; c < img.channels; ++c)
                patch.at(bx, by, c) = img.at(box.x + bx, box.y + by, c);

    int tw, th;
    if (box.w >= box.h) {
        tw = s;
        th = std::max(1, static_cast<int>(std::lround(
                             static_cast<double>(box.h) * s / box.w)));
    } else {
        th = s;
        tw = std::max(1, static_cast<int>(std::lround(
                             static_cast<double>(box.w) * s / box.h)));
    }

    ImageBuffer small = resize_area(patch, tw, th);
    ImageBuffer up = resize_bilinear(small, box.w, box.h);

    ImageBuffer result = img;
    for (int by = 0; by < box.h; ++by)
        for (int bx = 0; bx < box.w; ++bx)
            for (int c = 0; c < img.channels; ++c)
                result.at(box.x + bx, box.y + by, c) = up.at(bx, by, c);
    return result;
}

} // namespace obfair
