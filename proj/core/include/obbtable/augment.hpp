#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "obbtable/annot.hpp"
#include "obbtable/geometry.hpp"
#include "obbtable/raster.hpp"

namespace obbtable::augment {

using geometry::AffineMap;
using geometry::Point;

/// Clockwise-on-screen rotation by angle_deg about center.
struct RotationSpec {
    double angle_deg{0.0};
    Point center{0.0, 0.0};

    static RotationSpec for_image(double angle_deg, int width, int height) {
        return {angle_deg, {width / 2.0, height / 2.0}};
    }
};

struct GenerationConfig {
    std::uint64_t seed{0};
    double angle_lo{0.0};
    double angle_hi{360.0};
    std::filesystem::path src_img_dir;
    std::filesystem::path src_ann_dir;
    std::filesystem::path out_dir;
    bool emit_hbb{true};
    bool emit_obb{true};
    std::string split{"train"};  // selects the annotation folder names
    int jobs{1};
};

struct ManifestRecord {
    std::string image_id;
    double angle_deg{0.0};
    int src_width{0}, src_height{0};
    int out_width{0}, out_height{0};
    std::size_t instance_count{0};
    std::string skip_reason;  // empty when processed
};

struct Manifest {
    GenerationConfig config;
    std::vector<ManifestRecord> records;  // image_id order
    std::size_t total_images{0};
    std::size_t total_instances{0};
    std::size_t skipped{0};
    std::uint64_t digest{0};  // FNV-1a 64 over all emitted files

    std::string to_text() const;
};

AffineMap rotation_matrix(const RotationSpec& spec);

struct BoundedMap {
    AffineMap map;
    int new_width{0};
    int new_height{0};
};

/// Expand a rotation map so the whole source rectangle fits the output
/// canvas; translation is recentered by half the size change.
BoundedMap adapt_bounds(const AffineMap& m, int width, int height);

struct RotatedImage {
    raster::Raster image;
    std::vector<annot::Instance> instances;
};

/// Rotation keeping the original canvas; content (and quads) may leave
/// the bounds.
RotatedImage rotate_original(const raster::Raster& img, const RotationSpec& spec,
                             const std::vector<annot::Instance>& instances,
                             const raster::WarpOptions& opts = {});

/// Rotation onto the adaptively expanded canvas; in-bounds quads stay in
/// bounds.
RotatedImage rotate_bounded(const raster::Raster& img, const RotationSpec& spec,
                            const std::vector<annot::Instance>& instances,
                            const raster::WarpOptions& opts = {});

/// Deterministic per-image angle: one SplitMix64 step keyed by
/// seed XOR fnv1a64(image_id), mapped uniformly onto [lo, hi).
double draw_angle(std::uint64_t seed, const std::string& image_id, double lo, double hi);

std::uint64_t fnv1a64(std::string_view data);

/// Table-style folder names for the annotation outputs.
std::string obb_dir_name(const std::string& split);
std::string hbb_dir_name(const std::string& split);

Manifest generate_dataset(const GenerationConfig& cfg);

}  // namespace obbtable::augment
