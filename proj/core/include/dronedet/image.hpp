#pragma once

#include <array>
#include <string>
#include <vector>

#include "dronedet/geometry.hpp"

namespace dronedet {

// H x W x 3 interleaved RGB, values in [0, 1].
struct Image {
    int h = 0, w = 0;
    std::vector<float> px;

    Image() = default;
    Image(int height, int width, float fill = 0.0f)
        : h(height), w(width), px(static_cast<size_t>(height) * width * 3, fill) {}

    float& at(int y, int x, int c) { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    float at(int y, int x, int c) const { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    bool empty() const { return px.empty(); }
};

// Row-major 3x3 homography. apply() maps input coordinates to output
// coordinates; warping samples through the inverse.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }
    double operator()(int r, int c) const { return m[r * 3 + c]; }
    Mat3 operator*(const Mat3& o) const;
    double det() const;
    Mat3 inverse() const; // throws on a singular matrix
    void apply(double x, double y, double& ox, double& oy) const;
    bool is_identity(double tol = 0.0) const;
};

// Binary PPM (P6, maxval 255). Lossless 8-bit storage keeps synthetic videos
// byte-reproducible without codec dependencies.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

Image resize_bilinear(const Image& src, int out_h, int out_w);

// Samples src through map_out_to_in = H^-1; pixels mapping outside src are
// filled with `fill`.
Image warp_perspective(const Image& src, const Mat3& out_to_in, float fill = 0.5f);

Image flip_horizontal(const Image& src);

void fill_rect(Image& img, int y1, int x1, int y2, int x2, float r, float g, float b);

void draw_box(Image& img, const Box& box, float r, float g, float b, int thickness = 1);

} // namespace dronedet
