#include "dronedet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dronedet {

std::string to_hex(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

bool Box::valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
           x2 > x1 && y2 > y1 && frame_index >= 0;
}

Box make_box(double x1, double y1, double x2, double y2, int frame_index) {
    Box b{x1, y1, x2, y2, frame_index};
    if (!b.valid()) {
        std::ostringstream os;
        os << "invalid box (" << x1 << "," << y1 << "," << x2 << "," << y2
           << ") at frame " << frame_index << ": coordinates must be finite with x2>x1, y2>y1";
        throw Error(os.str());
    }
    return b;
}

void validate(const VideoMeta& meta) {
    check(meta.fps > 0, "VideoMeta '" + meta.video_id + "': fps must be > 0");
    check(meta.frame_count >= 1, "VideoMeta '" + meta.video_id + "': frame_count must be >= 1");
    check(meta.width > 0 && meta.height > 0,
          "VideoMeta '" + meta.video_id + "': dimensions must be positive");
}

double iou(const Box& a, const Box& b) {
    const double area_a = a.area();
    const double area_b = b.area();
    if (area_a <= 0 || area_b <= 0) return 0.0;
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);
    const double iw = ix2 - ix1;
    const double ih = iy2 - iy1;
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    return inter / (area_a + area_b - inter);
}

CenterForm to_center_form(const Box& b) {
    return CenterForm{(b.x1 + b.x2) / 2, (b.y1 + b.y2) / 2, b.x2 - b.x1, b.y2 - b.y1};
}

Box from_center_form(const CenterForm& c, int frame_index) {
    return Box{c.cx - c.w / 2, c.cy - c.h / 2, c.cx + c.w / 2, c.cy + c.h / 2, frame_index};
}

Box clamp_to_frame(const Box& b, const VideoMeta& meta) {
    Box r = b;
    r.x1 = std::clamp(b.x1, 0.0, static_cast<double>(meta.width));
    r.x2 = std::clamp(b.x2, 0.0, static_cast<double>(meta.width));
    r.y1 = std::clamp(b.y1, 0.0, static_cast<double>(meta.height));
    r.y2 = std::clamp(b.y2, 0.0, static_cast<double>(meta.height));
    if (r.x2 <= r.x1 || r.y2 <= r.y1) {
        std::ostringstream os;
        os << "box (" << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2
           << ") lies outside the " << meta.width << "x" << meta.height << " frame";
        throw Error(os.str());
    }
    return r;
}

} // namespace dronedet
