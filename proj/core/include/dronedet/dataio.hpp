#pragma once

#include <string>
#include <vector>

#include "dronedet/geometry.hpp"
#include "dronedet/image.hpp"
#include "dronedet/rng.hpp"

namespace dronedet {

// tau consecutive frames plus their annotations; the unit of model input.
struct Clip {
    std::vector<Image> frames;
    std::vector<int> frame_indices;
    std::vector<std::vector<GroundTruth>> annotations;
    VideoMeta meta;

    int tau() const { return static_cast<int>(frames.size()); }
};

void validate_clip(const Clip& clip);

struct VideoData {
    VideoMeta meta;
    std::vector<Image> frames;
    std::vector<std::vector<GroundTruth>> annotations;
};

struct DatasetEntry {
    std::string video_id;
    std::string path;            // directory of numbered ppm frames
    std::string annotation_path; // csv
    VideoMeta meta;
    std::string split;           // train | val | test
};

struct DatasetIndex {
    std::vector<DatasetEntry> entries;
};

DatasetIndex load_dataset_index(const std::string& path);
void save_dataset_index(const std::string& path, const DatasetIndex& index);
DatasetIndex filter_split(const DatasetIndex& index, const std::string& split);

// ---- annotation csv: "frame_index,x1,y1,x2,y2,class_id", header required ----

struct AnnotationLoadResult {
    std::vector<std::vector<GroundTruth>> per_frame; // sized meta.frame_count
    int duplicates_removed = 0;
    int clamped = 0;
};

AnnotationLoadResult load_annotations(const std::string& path, const VideoMeta& meta);
void save_annotations(const std::string& path,
                      const std::vector<std::vector<GroundTruth>>& per_frame);

// ---- video frame storage (directories of ppm files) ----

std::string frame_filename(int frame_index);
void save_video_frames(const std::string& dir, const std::vector<Image>& frames);
std::vector<Image> load_video_frames(const std::string& dir, int frame_count);
VideoData load_video(const DatasetEntry& entry);

// ---- clip sampling ----

// Non-overlapping tau-windows covering [0, frame_count); the tail window is
// padded by repeating the last frame index.
std::vector<std::vector<int>> sliding_windows(int frame_count, int tau);

// Uniformly random clip of tau consecutive frames containing at least one
// annotated frame. Videos shorter than tau are padded by replicating the
// last frame. Throws if the video has no annotated frames.
Clip sample_train_clip(const VideoData& video, int tau, Rng& rng);

Clip clip_from_window(const VideoData& video, const std::vector<int>& window);

// Resizes every frame to out_h x out_w and rescales the annotations.
Clip resize_clip(const Clip& clip, int out_h, int out_w);

// ---- synthetic benchmark generator ----

struct SyntheticConfig {
    int num_videos = 8;
    int frames_per_video = 48;
    int height = 64;
    int width = 64;
    double min_target_w = 6, min_target_h = 5;
    double max_target_w = 14, max_target_h = 12;
    int targets_per_video = 1;
    double ego_motion_amplitude = 0.6; // background drift, pixels/frame
    double blur_probability = 0.0;     // per-frame motion smear, annotation kept
    double occlusion_probability = 0.0; // per-frame visibility gap, annotation dropped
    double fps = 30.0;
    uint64_t seed = 0;
};

void validate(const SyntheticConfig& cfg);

struct SyntheticSummary {
    int num_videos = 0;
    int total_frames = 0;
    int total_objects = 0;
    std::string index_path;
};

// Deterministic in cfg (byte-identical reruns). Writes
//   <out_dir>/videos/<id>/frame_NNNNNN.ppm
//   <out_dir>/annotations/<id>.csv
//   <out_dir>/index.json
SyntheticSummary generate_synthetic(const SyntheticConfig& cfg, const std::string& out_dir);

} // namespace dronedet
