#include "dronedet/dataio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dronedet {

void validate_clip(const Clip& clip) {
    const int tau = clip.tau();
    check(tau >= 1, "clip must contain at least one frame");
    check(static_cast<int>(clip.frame_indices.size()) == tau &&
              static_cast<int>(clip.annotations.size()) == tau,
          "clip: frames/indices/annotations size mismatch");
    for (const Image& f : clip.frames)
        check(f.h == clip.frames[0].h && f.w == clip.frames[0].w,
              "clip: frames must share one resolution");
}

DatasetIndex load_dataset_index(const std::string& path) {
    std::ifstream f(path);
    check(f.good(), "cannot open dataset index " + path);
    json j;
    f >> j;
    check(j.contains("videos") && j["videos"].is_array(), "dataset index: missing 'videos' array");
    DatasetIndex idx;
    const fs::path base = fs::path(path).parent_path();
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& v : j["videos"]) {
        DatasetEntry e;
        e.video_id = v.at("video_id").get<std::string>();
        e.path = (base / v.at("path").get<std::string>()).string();
        e.annotation_path = (base / v.at("annotation_path").get<std::string>()).string();
        e.meta.video_id = e.video_id;
        e.meta.frame_count = v.at("frame_count").get<int>();
        e.meta.width = v.at("width").get<int>();
        e.meta.height = v.at("height").get<int>();
        e.meta.fps = v.at("fps").get<double>();
        e.split = v.at("split").get<std::string>();
        check(e.split == "train" || e.split == "val" || e.split == "test",
              "dataset index: unknown split '" + e.split + "'");
        validate(e.meta);
        check(seen.insert({e.split, e.video_id}).second,
              "dataset index: duplicate video_id '" + e.video_id + "' in split " + e.split);
        idx.entries.push_back(std::move(e));
    }
    return idx;
}

void save_dataset_index(const std::string& path, const DatasetIndex& index) {
    json j;
    j["videos"] = json::array();
    const fs::path base = fs::path(path).parent_path();
    for (const auto& e : index.entries) {
        json v;
        v["video_id"] = e.video_id;
        v["path"] = fs::relative(e.path, base).string();
        v["annotation_path"] = fs::relative(e.annotation_path, base).string();
        v["frame_count"] = e.meta.frame_count;
        v["width"] = e.meta.width;
        v["height"] = e.meta.height;
        v["fps"] = e.meta.fps;
        v["split"] = e.split;
        j["videos"].push_back(v);
    }
    std::ofstream f(path);
    check(f.good(), "cannot write dataset index " + path);
    f << j.dump(2) << "\n";
}

DatasetIndex filter_split(const DatasetIndex& index, const std::string& split) {
    DatasetIndex out;
    for (const auto& e : index.entries)
        if (e.split == split) out.entries.push_back(e);
    return out;
}

// ---------------- annotations ----------------

AnnotationLoadResult load_annotations(const std::string& path, const VideoMeta& meta) {
    std::ifstream f(path);
    check(f.good(), "cannot open annotation file " + path);
    AnnotationLoadResult res;
    res.per_frame.assign(static_cast<size_t>(meta.frame_count), {});
    std::string line;
    check(static_cast<bool>(std::getline(f, line)), "annotation file " + path + " missing header");
    // tolerate \r\n
    if (!line.empty() && line.back() == '\r') line.pop_back();
    check(line == "frame_index,x1,y1,x2,y2,class_id",
          "annotation file " + path + ": unexpected header '" + line + "'");
    std::set<std::tuple<int, double, double, double, double, int>> seen;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        int frame = -1, cls = -1;
        double x1, y1, x2, y2;
        char tail;
        const int got = std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%d%c",
                                    &frame, &x1, &y1, &x2, &y2, &cls, &tail);
        if (got != 6) {
            std::ostringstream os;
            os << path << ":" << lineno << ": malformed annotation row '" << line << "'";
            throw Error(os.str());
        }
        if (frame < 0 || frame >= meta.frame_count) {
            std::ostringstream os;
            os << path << ":" << lineno << ": frame_index " << frame << " outside [0,"
               << meta.frame_count << ")";
            throw Error(os.str());
        }
        check(cls >= 0, path + ":" + std::to_string(lineno) + ": negative class_id");
        if (!seen.insert({frame, x1, y1, x2, y2, cls}).second) {
            ++res.duplicates_removed;
            continue;
        }
        Box b;
        try {
            b = make_box(x1, y1, x2, y2, frame);
        } catch (const Error& e) {
            std::ostringstream os;
            os << path << ":" << lineno << ": " << e.what();
            throw Error(os.str());
        }
        const bool oob = b.x1 < 0 || b.y1 < 0 || b.x2 > meta.width || b.y2 > meta.height;
        if (oob) {
            b = clamp_to_frame(b, meta); // throws when fully outside
            ++res.clamped;
        }
        res.per_frame[static_cast<size_t>(frame)].push_back(GroundTruth{b, cls});
    }
    return res;
}

void save_annotations(const std::string& path,
                      const std::vector<std::vector<GroundTruth>>& per_frame) {
    std::ofstream f(path);
    check(f.good(), "cannot write annotation file " + path);
    f << "frame_index,x1,y1,x2,y2,class_id\n";
    char buf[256];
    for (size_t fr = 0; fr < per_frame.size(); ++fr)
        for (const GroundTruth& gt : per_frame[fr]) {
            std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g,%.12g,%d\n", fr, gt.box.x1,
                          gt.box.y1, gt.box.x2, gt.box.y2, gt.class_id);
            f << buf;
        }
}

// ---------------- video storage ----------------

std::string frame_filename(int frame_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.ppm", frame_index);
    return buf;
}

void save_video_frames(const std::string& dir, const std::vector<Image>& frames) {
    fs::create_directories(dir);
    for (size_t i = 0; i < frames.size(); ++i)
        write_ppm((fs::path(dir) / frame_filename(static_cast<int>(i))).string(), frames[i]);
}

std::vector<Image> load_video_frames(const std::string& dir, int frame_count) {
    std::vector<Image> frames;
    frames.reserve(static_cast<size_t>(frame_count));
    for (int i = 0; i < frame_count; ++i)
        frames.push_back(read_ppm((fs::path(dir) / frame_filename(i)).string()));
    return frames;
}

VideoData load_video(const DatasetEntry& entry) {
    VideoData v;
    v.meta = entry.meta;
    v.frames = load_video_frames(entry.path, entry.meta.frame_count);
    v.annotations = load_annotations(entry.annotation_path, entry.meta).per_frame;
    return v;
}

// ---------------- clip sampling ----------------

std::vector<std::vector<int>> sliding_windows(int frame_count, int tau) {
    check(frame_count >= 1, "sliding_windows: frame_count must be >= 1");
    check(tau >= 1, "sliding_windows: tau must be >= 1");
    std::vector<std::vector<int>> windows;
    for (int start = 0; start < frame_count; start += tau) {
        std::vector<int> w(static_cast<size_t>(tau));
        for (int i = 0; i < tau; ++i) w[static_cast<size_t>(i)] = std::min(start + i, frame_count - 1);
        windows.push_back(std::move(w));
    }
    return windows;
}

Clip clip_from_window(const VideoData& video, const std::vector<int>& window) {
    Clip clip;
    clip.meta = video.meta;
    for (int idx : window) {
        check(idx >= 0 && idx < static_cast<int>(video.frames.size()),
              "clip window index out of range");
        clip.frames.push_back(video.frames[static_cast<size_t>(idx)]);
        clip.frame_indices.push_back(idx);
        clip.annotations.push_back(idx < static_cast<int>(video.annotations.size())
                                       ? video.annotations[static_cast<size_t>(idx)]
                                       : std::vector<GroundTruth>{});
    }
    validate_clip(clip);
    return clip;
}

Clip sample_train_clip(const VideoData& video, int tau, Rng& rng) {
    check(tau >= 1, "sample_train_clip: tau must be >= 1");
    const int L = static_cast<int>(video.frames.size());
    check(L >= 1, "sample_train_clip: empty video");
    bool any_annotated = false;
    for (const auto& a : video.annotations) any_annotated = any_annotated || !a.empty();
    if (!any_annotated)
        throw Error("sample_train_clip: video '" + video.meta.video_id +
                    "' has no annotated frames");

    const int last_start = std::max(0, L - tau);
    std::vector<int> valid_starts;
    for (int s = 0; s <= last_start; ++s) {
        bool has = false;
        for (int i = 0; i < tau && s + i < L; ++i)
            has = has || !video.annotations[static_cast<size_t>(s + i)].empty();
        if (has) valid_starts.push_back(s);
    }
    check(!valid_starts.empty(), "sample_train_clip: no valid clip start positions");
    const int start = valid_starts[static_cast<size_t>(rng.uniform_int(
        static_cast<int>(valid_starts.size())))];

    std::vector<int> window(static_cast<size_t>(tau));
    for (int i = 0; i < tau; ++i) window[static_cast<size_t>(i)] = std::min(start + i, L - 1);
    return clip_from_window(video, window);
}

Clip resize_clip(const Clip& clip, int out_h, int out_w) {
    if (out_h == clip.frames[0].h && out_w == clip.frames[0].w) return clip;
    Clip out;
    out.meta = clip.meta;
    out.meta.width = out_w;
    out.meta.height = out_h;
    out.frame_indices = clip.frame_indices;
    const double sx = static_cast<double>(out_w) / clip.frames[0].w;
    const double sy = static_cast<double>(out_h) / clip.frames[0].h;
    for (const Image& f : clip.frames) out.frames.push_back(resize_bilinear(f, out_h, out_w));
    for (const auto& anns : clip.annotations) {
        std::vector<GroundTruth> scaled;
        for (const GroundTruth& gt : anns)
            scaled.push_back(GroundTruth{
                make_box(gt.box.x1 * sx, gt.box.y1 * sy, gt.box.x2 * sx, gt.box.y2 * sy,
                         gt.box.frame_index),
                gt.class_id});
        out.annotations.push_back(std::move(scaled));
    }
    validate_clip(out);
    return out;
}

// ---------------- synthetic generator ----------------

void validate(const SyntheticConfig& cfg) {
    check(cfg.num_videos >= 1, "synthetic: num_videos must be >= 1");
    check(cfg.frames_per_video >= 1, "synthetic: frames_per_video must be >= 1");
    check(cfg.height >= 16 && cfg.width >= 16, "synthetic: resolution too small");
    check(cfg.min_target_w > 0 && cfg.min_target_h > 0, "synthetic: target sizes must be positive");
    check(cfg.max_target_w >= cfg.min_target_w && cfg.max_target_h >= cfg.min_target_h,
          "synthetic: target size range inverted");
    check(cfg.max_target_w < cfg.width && cfg.max_target_h < cfg.height,
          "synthetic: target size exceeds resolution");
    check(cfg.blur_probability >= 0 && cfg.blur_probability <= 1 &&
              cfg.occlusion_probability >= 0 && cfg.occlusion_probability <= 1,
          "synthetic: probabilities must lie in [0,1]");
    check(cfg.targets_per_video >= 1, "synthetic: targets_per_video must be >= 1");
    check(cfg.ego_motion_amplitude >= 0, "synthetic: ego_motion_amplitude must be >= 0");
    check(cfg.fps > 0, "synthetic: fps must be > 0");
}

namespace {

// Smooth value-noise texture with a few low-contrast cloud blobs; the moving
// window over it provides ego motion.
struct BackgroundTexture {
    int h = 0, w = 0;
    std::vector<float> gray;

    float at(double y, double x) const {
        const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, w - 1);
        const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, h - 1);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wx = std::clamp(x - x0, 0.0, 1.0);
        const double wy = std::clamp(y - y0, 0.0, 1.0);
        const double top = gray[static_cast<size_t>(y0) * w + x0] * (1 - wx) +
                           gray[static_cast<size_t>(y0) * w + x1] * wx;
        const double bot = gray[static_cast<size_t>(y1) * w + x0] * (1 - wx) +
                           gray[static_cast<size_t>(y1) * w + x1] * wx;
        return static_cast<float>(top * (1 - wy) + bot * wy);
    }
};

BackgroundTexture make_texture(int h, int w, Rng& rng) {
    BackgroundTexture t;
    t.h = h;
    t.w = w;
    t.gray.assign(static_cast<size_t>(h) * w, 0.0f);
    struct Wave {
        double kx, ky, phase, amp;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 4; ++i)
        waves.push_back(Wave{rng.uniform(0.02, 0.12), rng.uniform(0.02, 0.12),
                             rng.uniform(0.0, 6.283185307179586), rng.uniform(0.02, 0.06)});
    const double base = rng.uniform(0.55, 0.75);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = base;
            for (const Wave& wv : waves) v += wv.amp * std::sin(wv.kx * x + wv.ky * y + wv.phase);
            v += rng.uniform(-0.015, 0.015);
            t.gray[static_cast<size_t>(y) * w + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    // soft clouds: large, low contrast
    const int n_clouds = 3 + rng.uniform_int(4);
    for (int i = 0; i < n_clouds; ++i) {
        const double cx = rng.uniform(0.0, w - 1.0), cy = rng.uniform(0.0, h - 1.0);
        const double rx = rng.uniform(0.08, 0.25) * w, ry = rng.uniform(0.08, 0.25) * h;
        const double amp = rng.uniform(-0.08, 0.08);
        const int x0 = std::max(0, static_cast<int>(cx - 2 * rx));
        const int x1 = std::min(w - 1, static_cast<int>(cx + 2 * rx));
        const int y0 = std::max(0, static_cast<int>(cy - 2 * ry));
        const int y1 = std::min(h - 1, static_cast<int>(cy + 2 * ry));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double d = ((x - cx) / rx) * ((x - cx) / rx) +
                                 ((y - cy) / ry) * ((y - cy) / ry);
                if (d < 4) {
                    const double a = amp * std::exp(-d);
                    auto& px = t.gray[static_cast<size_t>(y) * w + x];
                    px = static_cast<float>(std::clamp(px + a, 0.0, 1.0));
                }
            }
    }
    return t;
}

struct TargetTrack {
    double cx0, cy0, vx, vy;       // linear component (frame coordinates)
    double ax, ay, px, py, phx, phy; // sinusoidal component
    double rw, rh;                 // ellipse half extents
    double shade;                  // blob intensity (dark on light sky)

    void center(int t, double& cx, double& cy) const {
        cx = cx0 + vx * t + ax * std::sin(6.283185307179586 * t / px + phx);
        cy = cy0 + vy * t + ay * std::sin(6.283185307179586 * t / py + phy);
    }
};

void render_blob(Image& img, double cx, double cy, double rw, double rh, double shade,
                 double alpha) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - rw)));
    const int x1 = std::min(img.w - 1, static_cast<int>(std::ceil(cx + rw)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - rh)));
    const int y1 = std::min(img.h - 1, static_cast<int>(std::ceil(cy + rh)));
    const double edge = std::max(rw, rh);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = (x - cx) / rw, dy = (y - cy) / rh;
            const double s = std::sqrt(dx * dx + dy * dy);
            const double a = alpha * std::clamp((1.0 - s) * edge, 0.0, 1.0);
            if (a <= 0) continue;
            for (int c = 0; c < 3; ++c) {
                const double v = img.at(y, x, c) * (1 - a) + shade * a;
                img.at(y, x, c) = static_cast<float>(v);
            }
        }
}

} // namespace

SyntheticSummary generate_synthetic(const SyntheticConfig& cfg, const std::string& out_dir) {
    validate(cfg);
    fs::create_directories(fs::path(out_dir) / "videos");
    fs::create_directories(fs::path(out_dir) / "annotations");

    Rng master(cfg.seed);
    SyntheticSummary summary;
    DatasetIndex index;

    const int n_train = std::max(1, static_cast<int>(std::lround(cfg.num_videos * 0.7)));
    const int n_val = std::max(cfg.num_videos >= 3 ? 1 : 0,
                               static_cast<int>(std::lround(cfg.num_videos * 0.15)));

    for (int vi = 0; vi < cfg.num_videos; ++vi) {
        Rng rng = master.fork(static_cast<uint64_t>(vi) + 1);
        char vid[32];
        std::snprintf(vid, sizeof(vid), "synth_%04d", vi);

        // ego motion: linear drift plus gentle oscillation across the texture
        const double amp = cfg.ego_motion_amplitude;
        const double ang = rng.uniform(0.0, 6.283185307179586);
        const double speed = amp * rng.uniform(0.4, 1.0);
        const double evx = speed * std::cos(ang), evy = speed * std::sin(ang);
        const double eax = amp * rng.uniform(0.0, 2.0), eay = amp * rng.uniform(0.0, 2.0);
        const double epx = rng.uniform(20.0, 60.0), epy = rng.uniform(20.0, 60.0);
        const double ephx = rng.uniform(0.0, 6.28), ephy = rng.uniform(0.0, 6.28);

        const double drift = (std::abs(evx) + std::abs(evy) + eax + eay) * cfg.frames_per_video;
        const int margin = static_cast<int>(std::ceil(std::min(drift, 4000.0))) + 4;
        BackgroundTexture tex = make_texture(cfg.height + 2 * margin, cfg.width + 2 * margin, rng);
        const double ox0 = margin + (drift > 0 ? rng.uniform(-2.0, 2.0) : 0.0);
        const double oy0 = margin + (drift > 0 ? rng.uniform(-2.0, 2.0) : 0.0);

        // per-channel sky tint
        const double tr = rng.uniform(0.92, 1.0), tg = rng.uniform(0.92, 1.0),
                     tb = rng.uniform(0.95, 1.0);

        std::vector<TargetTrack> tracks;
        for (int ti = 0; ti < cfg.targets_per_video; ++ti) {
            TargetTrack tk;
            tk.rw = rng.uniform(cfg.min_target_w, cfg.max_target_w) / 2.0;
            tk.rh = rng.uniform(cfg.min_target_h, cfg.max_target_h) / 2.0;
            tk.ax = rng.uniform(0.0, 2.0);
            tk.ay = rng.uniform(0.0, 2.0);
            tk.px = rng.uniform(10.0, 40.0);
            tk.py = rng.uniform(10.0, 40.0);
            tk.phx = rng.uniform(0.0, 6.28);
            tk.phy = rng.uniform(0.0, 6.28);
            const double mx = tk.rw + tk.ax + 2, my = tk.rh + tk.ay + 2;
            const double sx = rng.uniform(mx, cfg.width - mx), sy = rng.uniform(my, cfg.height - my);
            const double exx = rng.uniform(mx, cfg.width - mx), eyy = rng.uniform(my, cfg.height - my);
            tk.cx0 = sx;
            tk.cy0 = sy;
            const int T = std::max(1, cfg.frames_per_video - 1);
            tk.vx = (exx - sx) / T;
            tk.vy = (eyy - sy) / T;
            tk.shade = rng.uniform(0.05, 0.22); // dark silhouette
            tracks.push_back(tk);
        }

        std::vector<Image> frames;
        std::vector<std::vector<GroundTruth>> anns(static_cast<size_t>(cfg.frames_per_video));
        int objects = 0;
        for (int t = 0; t < cfg.frames_per_video; ++t) {
            const double ox = ox0 + evx * t + eax * std::sin(6.283185307179586 * t / epx + ephx);
            const double oy = oy0 + evy * t + eay * std::sin(6.283185307179586 * t / epy + ephy);
            Image img(cfg.height, cfg.width);
            for (int y = 0; y < cfg.height; ++y)
                for (int x = 0; x < cfg.width; ++x) {
                    const float gy = tex.at(oy + y, ox + x);
                    img.at(y, x, 0) = static_cast<float>(gy * tr);
                    img.at(y, x, 1) = static_cast<float>(gy * tg);
                    img.at(y, x, 2) = static_cast<float>(gy * tb);
                }
            for (const TargetTrack& tk : tracks) {
                const bool occluded = rng.bernoulli(cfg.occlusion_probability);
                const bool blurred = !occluded && rng.bernoulli(cfg.blur_probability);
                if (occluded) continue; // visibility gap: no pixels, no annotation
                double cx, cy;
                tk.center(t, cx, cy);
                if (blurred) {
                    // low-visibility smear along the motion vector
                    double pcx, pcy, ncx, ncy;
                    tk.center(std::max(0, t - 1), pcx, pcy);
                    tk.center(t + 1, ncx, ncy);
                    const double mvx = (ncx - pcx) / 2.0, mvy = (ncy - pcy) / 2.0;
                    for (int s = -2; s <= 2; ++s)
                        render_blob(img, cx + mvx * 0.45 * s, cy + mvy * 0.45 * s, tk.rw, tk.rh,
                                    tk.shade, 0.05);
                } else {
                    render_blob(img, cx, cy, tk.rw, tk.rh, tk.shade, 1.0);
                }
                anns[static_cast<size_t>(t)].push_back(
                    GroundTruth{make_box(cx - tk.rw, cy - tk.rh, cx + tk.rw, cy + tk.rh, t), 0});
                ++objects;
            }
            frames.push_back(std::move(img));
        }

        const std::string vdir = (fs::path(out_dir) / "videos" / vid).string();
        const std::string apath = (fs::path(out_dir) / "annotations" / (std::string(vid) + ".csv")).string();
        save_video_frames(vdir, frames);
        save_annotations(apath, anns);

        DatasetEntry e;
        e.video_id = vid;
        e.path = vdir;
        e.annotation_path = apath;
        e.meta = VideoMeta{vid, cfg.frames_per_video, cfg.width, cfg.height, cfg.fps};
        e.split = vi < n_train ? "train" : (vi < n_train + n_val ? "val" : "test");
        index.entries.push_back(e);

        summary.total_frames += cfg.frames_per_video;
        summary.total_objects += objects;
    }
    summary.num_videos = cfg.num_videos;
    summary.index_path = (fs::path(out_dir) / "index.json").string();
    save_dataset_index(summary.index_path, index);
    return summary;
}

} // namespace dronedet
