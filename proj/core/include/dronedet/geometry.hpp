#pragma once

#include <string>
#include <vector>

#include "dronedet/common.hpp"

namespace dronedet {

// Axis-aligned box in pixel coordinates, corner form. Annotations that come
// in (x, y, w, h) form are converted at ingestion.
struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    int frame_index = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    bool valid() const;
};

// Validating constructor: rejects non-finite coordinates and zero/negative
// area. Degenerate boxes are invalid from the start, so downstream metrics
// never see them.
Box make_box(double x1, double y1, double x2, double y2, int frame_index = 0);

struct Detection {
    Box box;
    double confidence = 0;
    int class_id = 0;
};

struct GroundTruth {
    Box box;
    int class_id = 0;
};

struct VideoMeta {
    std::string video_id;
    int frame_count = 0;
    int width = 0;
    int height = 0;
    double fps = 30.0;
};

void validate(const VideoMeta& meta);

struct CenterForm {
    double cx = 0, cy = 0, w = 0, h = 0;
};

// Intersection-over-union in [0, 1]. Symmetric; 0 for disjoint boxes and for
// any degenerate (zero-area) operand.
double iou(const Box& a, const Box& b);

CenterForm to_center_form(const Box& b);
Box from_center_form(const CenterForm& c, int frame_index = 0);

// Clips the box to [0, width] x [0, height]. Throws if clipping collapses
// the box to zero area (box fully outside the frame).
Box clamp_to_frame(const Box& b, const VideoMeta& meta);

} // namespace dronedet
