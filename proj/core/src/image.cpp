#include "dronedet/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace dronedet {

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
            r(i, j) = s;
        }
    return r;
}

double Mat3::det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 Mat3::inverse() const {
    const double d = det();
    check(std::abs(d) > 1e-12, "Mat3::inverse: singular matrix");
    const double inv = 1.0 / d;
    Mat3 r;
    r.m = {(m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv,
           (m[1] * m[5] - m[2] * m[4]) * inv, (m[5] * m[6] - m[3] * m[8]) * inv,
           (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
           (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv,
           (m[0] * m[4] - m[1] * m[3]) * inv};
    return r;
}

void Mat3::apply(double x, double y, double& ox, double& oy) const {
    const double wz = m[6] * x + m[7] * y + m[8];
    ox = (m[0] * x + m[1] * y + m[2]) / wz;
    oy = (m[3] * x + m[4] * y + m[5]) / wz;
}

bool Mat3::is_identity(double tol) const {
    static const double id[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int i = 0; i < 9; ++i)
        if (std::abs(m[i] - id[i]) > tol) return false;
    return true;
}

void write_ppm(const std::string& path, const Image& img) {
    check(!img.empty(), "write_ppm: empty image");
    std::ofstream f(path, std::ios::binary);
    check(f.good(), "write_ppm: cannot open " + path);
    f << "P6\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(img.w) * 3);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(img.at(y, x, c), 0.0f, 1.0f);
                row[static_cast<size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    check(f.good(), "write_ppm: write failed for " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check(f.good(), "read_ppm: cannot open " + path);
    std::string magic;
    f >> magic;
    check(magic == "P6", "read_ppm: " + path + " is not a binary PPM");
    int w = 0, h = 0, maxval = 0;
    auto skip_ws_comments = [&f]() {
        while (true) {
            int c = f.peek();
            if (c == '#') {
                std::string line;
                std::getline(f, line);
            } else if (std::isspace(c)) {
                f.get();
            } else {
                break;
            }
        }
    };
    skip_ws_comments();
    f >> w;
    skip_ws_comments();
    f >> h;
    skip_ws_comments();
    f >> maxval;
    check(w > 0 && h > 0 && maxval == 255, "read_ppm: unsupported PPM header in " + path);
    f.get(); // single whitespace byte after header
    Image img(h, w);
    std::vector<unsigned char> buf(static_cast<size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    check(f.gcount() == static_cast<std::streamsize>(buf.size()),
          "read_ppm: truncated pixel data in " + path);
    for (size_t i = 0; i < buf.size(); ++i) img.px[i] = static_cast<float>(buf[i]) / 255.0f;
    return img;
}

Image resize_bilinear(const Image& src, int out_h, int out_w) {
    check(out_h > 0 && out_w > 0, "resize_bilinear: output dims must be positive");
    if (out_h == src.h && out_w == src.w) return src;
    Image dst(out_h, out_w);
    const double sy = static_cast<double>(src.h) / out_h;
    const double sx = static_cast<double>(src.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.h - 1);
        const int y1 = std::min(y0 + 1, src.h - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.w - 1);
            const int x1 = std::min(x0 + 1, src.w - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            for (int c = 0; c < 3; ++c) {
                const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
                const double bot = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
                dst.at(y, x, c) = static_cast<float>(top * (1 - wy) + bot * wy);
            }
        }
    }
    return dst;
}

Image warp_perspective(const Image& src, const Mat3& out_to_in, float fill) {
    Image dst(src.h, src.w, fill);
    // continuous coordinates with pixel centers at i + 0.5, matching the box
    // coordinate convention
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x) {
            double ix, iy;
            out_to_in.apply(x + 0.5, y + 0.5, ix, iy);
            ix -= 0.5;
            iy -= 0.5;
            if (ix < 0 || iy < 0 || ix > src.w - 1 || iy > src.h - 1) continue;
            const int x0 = static_cast<int>(std::floor(ix));
            const int y0 = static_cast<int>(std::floor(iy));
            const int x1 = std::min(x0 + 1, src.w - 1);
            const int y1 = std::min(y0 + 1, src.h - 1);
            const double wx = ix - x0;
            const double wy = iy - y0;
            for (int c = 0; c < 3; ++c) {
                const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
                const double bot = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
                dst.at(y, x, c) = static_cast<float>(top * (1 - wy) + bot * wy);
            }
        }
    return dst;
}

Image flip_horizontal(const Image& src) {
    Image dst(src.h, src.w);
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x)
            for (int c = 0; c < 3; ++c) dst.at(y, x, c) = src.at(y, src.w - 1 - x, c);
    return dst;
}

void fill_rect(Image& img, int y1, int x1, int y2, int x2, float r, float g, float b) {
    y1 = std::clamp(y1, 0, img.h);
    y2 = std::clamp(y2, 0, img.h);
    x1 = std::clamp(x1, 0, img.w);
    x2 = std::clamp(x2, 0, img.w);
    for (int y = y1; y < y2; ++y)
        for (int x = x1; x < x2; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
}

void draw_box(Image& img, const Box& box, float r, float g, float b, int thickness) {
    const int x1 = static_cast<int>(std::lround(box.x1));
    const int y1 = static_cast<int>(std::lround(box.y1));
    const int x2 = static_cast<int>(std::lround(box.x2));
    const int y2 = static_cast<int>(std::lround(box.y2));
    for (int t = 0; t < thickness; ++t) {
        fill_rect(img, y1 - t, x1 - t, y1 - t + 1, x2 + t, r, g, b);
        fill_rect(img, y2 + t - 1, x1 - t, y2 + t, x2 + t, r, g, b);
        fill_rect(img, y1 - t, x1 - t, y2 + t, x1 - t + 1, r, g, b);
        fill_rect(img, y1 - t, x2 + t - 1, y2 + t, x2 + t, r, g, b);
    }
}

} // namespace dronedet
