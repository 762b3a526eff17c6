#pragma once

#include "dronedet/dataio.hpp"
#include "dronedet/image.hpp"
#include "dronedet/rng.hpp"

namespace dronedet {

// One sampled augmentation. The homography lives in normalized [0,1]^2
// coordinates so a parameter set applies to any frame resolution; cutout
// rectangles are frame-relative fractions.
struct AugmentParams {
    Mat3 perspective; // normalized coords, input -> output
    struct CutoutRect {
        double x, y, w, h; // fractions of frame size
    };
    std::vector<CutoutRect> cutout_rects;
    double brightness_scale = 1.0;
    double contrast_scale = 1.0;
    double saturation_scale = 1.0;
    bool flip_horizontal = false;

    bool is_identity() const;
    bool operator==(const AugmentParams& o) const;
};

struct AugmentConfig {
    bool enable_perspective = true;
    double perspective_jitter = 0.001; // projective terms
    double affine_jitter = 0.02;       // scale/rotation/shear terms
    double translate_frac = 0.05;

    bool enable_cutout = true;
    int max_cutouts = 2;
    double cutout_area_frac = 0.05;

    bool enable_color_jitter = true;
    double color_jitter = 0.3;

    bool enable_flip = true;

    bool consistent = true;     // one parameter set per clip
    double box_min_area = 4.0;  // px^2, post-warp survival threshold
};

void validate(const AugmentConfig& cfg);

AugmentParams sample_params(const AugmentConfig& cfg, Rng& rng);

// Applies one parameter set to every frame of the clip and to its boxes
// (axis-aligned hull of the warped corners, clamped). Boxes that fall fully
// outside the frame or shrink below box_min_area are dropped and counted.
// Cutout never deletes boxes.
Clip apply(const Clip& clip, const AugmentParams& params, int* dropped_boxes = nullptr,
           double box_min_area = 4.0);

// consistent=true: one sample_params call for the whole clip.
// consistent=false: independent parameters per frame (ablation mode).
Clip augment_clip(const Clip& clip, const AugmentConfig& cfg, Rng& rng,
                  int* dropped_boxes = nullptr);

// Pixel-space homography for frames of size (w, h) from normalized params.
Mat3 perspective_to_pixels(const Mat3& normalized, int w, int h);

} // namespace dronedet
