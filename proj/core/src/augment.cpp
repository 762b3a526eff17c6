#include "dronedet/augment.hpp"

#include <algorithm>
#include <cmath>

namespace dronedet {

bool AugmentParams::is_identity() const {
    return perspective.is_identity() && cutout_rects.empty() && brightness_scale == 1.0 &&
           contrast_scale == 1.0 && saturation_scale == 1.0 && !flip_horizontal;
}

bool AugmentParams::operator==(const AugmentParams& o) const {
    if (perspective.m != o.perspective.m || flip_horizontal != o.flip_horizontal ||
        brightness_scale != o.brightness_scale || contrast_scale != o.contrast_scale ||
        saturation_scale != o.saturation_scale ||
        cutout_rects.size() != o.cutout_rects.size())
        return false;
    for (size_t i = 0; i < cutout_rects.size(); ++i) {
        const auto& a = cutout_rects[i];
        const auto& b = o.cutout_rects[i];
        if (a.x != b.x || a.y != b.y || a.w != b.w || a.h != b.h) return false;
    }
    return true;
}

void validate(const AugmentConfig& cfg) {
    check(cfg.perspective_jitter >= 0 && cfg.affine_jitter >= 0 && cfg.translate_frac >= 0,
          "augment: jitter strengths must be nonnegative");
    check(cfg.max_cutouts >= 0 && cfg.cutout_area_frac >= 0 && cfg.cutout_area_frac <= 1,
          "augment: invalid cutout settings");
    check(cfg.color_jitter >= 0 && cfg.color_jitter < 1, "augment: color_jitter must be in [0,1)");
    check(cfg.box_min_area >= 0, "augment: box_min_area must be nonnegative");
}

AugmentParams sample_params(const AugmentConfig& cfg, Rng& rng) {
    validate(cfg);
    AugmentParams p;
    if (cfg.enable_flip) p.flip_horizontal = rng.bernoulli(0.5);
    if (cfg.enable_perspective) {
        Mat3 h;
        h(0, 0) = 1.0 + rng.uniform(-cfg.affine_jitter, cfg.affine_jitter);
        h(0, 1) = rng.uniform(-cfg.affine_jitter, cfg.affine_jitter);
        h(1, 0) = rng.uniform(-cfg.affine_jitter, cfg.affine_jitter);
        h(1, 1) = 1.0 + rng.uniform(-cfg.affine_jitter, cfg.affine_jitter);
        h(0, 2) = rng.uniform(-cfg.translate_frac, cfg.translate_frac);
        h(1, 2) = rng.uniform(-cfg.translate_frac, cfg.translate_frac);
        h(2, 0) = rng.uniform(-cfg.perspective_jitter, cfg.perspective_jitter);
        h(2, 1) = rng.uniform(-cfg.perspective_jitter, cfg.perspective_jitter);
        check(std::abs(h.det()) > 1e-6, "sampled homography is singular");
        p.perspective = h;
    }
    if (cfg.enable_cutout && cfg.max_cutouts > 0 && cfg.cutout_area_frac > 0) {
        const int n = rng.uniform_int(cfg.max_cutouts + 1);
        for (int i = 0; i < n; ++i) {
            AugmentParams::CutoutRect r;
            const double area = rng.uniform(0.2, 1.0) * cfg.cutout_area_frac;
            const double aspect = rng.uniform(0.5, 2.0);
            r.w = std::min(0.95, std::sqrt(area * aspect));
            r.h = std::min(0.95, std::sqrt(area / aspect));
            r.x = rng.uniform(0.0, 1.0 - r.w);
            r.y = rng.uniform(0.0, 1.0 - r.h);
            p.cutout_rects.push_back(r);
        }
    }
    if (cfg.enable_color_jitter && cfg.color_jitter > 0) {
        p.brightness_scale = rng.uniform(1.0 - cfg.color_jitter, 1.0 + cfg.color_jitter);
        p.contrast_scale = rng.uniform(1.0 - cfg.color_jitter, 1.0 + cfg.color_jitter);
        p.saturation_scale = rng.uniform(1.0 - cfg.color_jitter, 1.0 + cfg.color_jitter);
    }
    return p;
}

Mat3 perspective_to_pixels(const Mat3& normalized, int w, int h) {
    Mat3 s, sinv;
    s(0, 0) = w;
    s(1, 1) = h;
    sinv(0, 0) = 1.0 / w;
    sinv(1, 1) = 1.0 / h;
    return s * normalized * sinv;
}

namespace {

void color_jitter_inplace(Image& img, const AugmentParams& p) {
    const float b = static_cast<float>(p.brightness_scale);
    const float c = static_cast<float>(p.contrast_scale);
    const float s = static_cast<float>(p.saturation_scale);
    const size_t n = img.px.size();
    for (size_t i = 0; i < n; i += 3) {
        float r = img.px[i] * b, g = img.px[i + 1] * b, bl = img.px[i + 2] * b;
        r = 0.5f + (r - 0.5f) * c;
        g = 0.5f + (g - 0.5f) * c;
        bl = 0.5f + (bl - 0.5f) * c;
        const float gray = 0.299f * r + 0.587f * g + 0.114f * bl;
        img.px[i] = std::clamp(gray + (r - gray) * s, 0.0f, 1.0f);
        img.px[i + 1] = std::clamp(gray + (g - gray) * s, 0.0f, 1.0f);
        img.px[i + 2] = std::clamp(gray + (bl - gray) * s, 0.0f, 1.0f);
    }
}

} // namespace

Clip apply(const Clip& clip, const AugmentParams& params, int* dropped_boxes,
           double box_min_area) {
    validate_clip(clip);
    if (dropped_boxes) *dropped_boxes = 0;
    if (params.is_identity()) return clip;

    const int W = clip.frames[0].w, H = clip.frames[0].h;

    // geometric map in pixel coordinates: flip first, then perspective
    Mat3 geo = perspective_to_pixels(params.perspective, W, H);
    if (params.flip_horizontal) {
        Mat3 flip;
        flip(0, 0) = -1;
        flip(0, 2) = W;
        geo = geo * flip;
    }
    const bool warp_needed = !geo.is_identity();
    Mat3 inv;
    if (warp_needed) inv = geo.inverse();

    const bool color_needed = params.brightness_scale != 1.0 || params.contrast_scale != 1.0 ||
                              params.saturation_scale != 1.0;

    Clip out;
    out.meta = clip.meta;
    out.frame_indices = clip.frame_indices;

    for (const Image& f : clip.frames) {
        Image img = warp_needed ? warp_perspective(f, inv) : f;
        if (color_needed) color_jitter_inplace(img, params);
        for (const auto& r : params.cutout_rects)
            fill_rect(img, static_cast<int>(r.y * H), static_cast<int>(r.x * W),
                      static_cast<int>((r.y + r.h) * H), static_cast<int>((r.x + r.w) * W), 0.5f,
                      0.5f, 0.5f);
        out.frames.push_back(std::move(img));
    }

    for (const auto& anns : clip.annotations) {
        std::vector<GroundTruth> warped;
        for (const GroundTruth& gt : anns) {
            if (!warp_needed) {
                warped.push_back(gt);
                continue;
            }
            const double xs[4] = {gt.box.x1, gt.box.x2, gt.box.x1, gt.box.x2};
            const double ys[4] = {gt.box.y1, gt.box.y1, gt.box.y2, gt.box.y2};
            double x1 = 1e300, y1 = 1e300, x2 = -1e300, y2 = -1e300;
            for (int i = 0; i < 4; ++i) {
                double ox, oy;
                geo.apply(xs[i], ys[i], ox, oy);
                x1 = std::min(x1, ox);
                y1 = std::min(y1, oy);
                x2 = std::max(x2, ox);
                y2 = std::max(y2, oy);
            }
            x1 = std::clamp(x1, 0.0, static_cast<double>(W));
            x2 = std::clamp(x2, 0.0, static_cast<double>(W));
            y1 = std::clamp(y1, 0.0, static_cast<double>(H));
            y2 = std::clamp(y2, 0.0, static_cast<double>(H));
            if (x2 - x1 <= 0 || y2 - y1 <= 0 || (x2 - x1) * (y2 - y1) < box_min_area) {
                if (dropped_boxes) ++*dropped_boxes;
                continue;
            }
            warped.push_back(GroundTruth{Box{x1, y1, x2, y2, gt.box.frame_index}, gt.class_id});
        }
        out.annotations.push_back(std::move(warped));
    }
    return out;
}

Clip augment_clip(const Clip& clip, const AugmentConfig& cfg, Rng& rng, int* dropped_boxes) {
    validate(cfg);
    if (dropped_boxes) *dropped_boxes = 0;
    if (cfg.consistent) {
        const AugmentParams p = sample_params(cfg, rng);
        return apply(clip, p, dropped_boxes, cfg.box_min_area);
    }
    // ablation mode: each frame gets its own parameters
    Clip out;
    out.meta = clip.meta;
    out.frame_indices = clip.frame_indices;
    for (int t = 0; t < clip.tau(); ++t) {
        Clip one;
        one.meta = clip.meta;
        one.frames.push_back(clip.frames[static_cast<size_t>(t)]);
        one.frame_indices.push_back(clip.frame_indices[static_cast<size_t>(t)]);
        one.annotations.push_back(clip.annotations[static_cast<size_t>(t)]);
        const AugmentParams p = sample_params(cfg, rng);
        int dropped = 0;
        Clip res = apply(one, p, &dropped, cfg.box_min_area);
        if (dropped_boxes) *dropped_boxes += dropped;
        out.frames.push_back(std::move(res.frames[0]));
        out.annotations.push_back(std::move(res.annotations[0]));
    }
    validate_clip(out);
    return out;
}

} // namespace dronedet
