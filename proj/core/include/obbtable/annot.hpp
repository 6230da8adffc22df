#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obbtable/geometry.hpp"

namespace obbtable::annot {

using geometry::Point;
using geometry::Quad;

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg, int line = 0)
        : std::runtime_error(msg), line_number(line) {}
    int line_number;
};

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One annotated box: quad + category + difficulty flag.
struct Instance {
    Quad quad;
    std::string category{"table"};
    int difficulty{0};

    friend bool operator==(const Instance&, const Instance&) = default;
};

struct ImageSize {
    int width{0};
    int height{0};
};

struct ImageAnnotation {
    std::string image_id;
    std::optional<ImageSize> image_size;
    std::vector<Instance> instances;
};

enum class FindingKind {
    Counterclockwise,
    StartPointSuspect,
    Degenerate,
    OutOfBounds,
};

struct Finding {
    std::size_t index{0};  // instance index within the annotation
    FindingKind kind{};
    std::string detail;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool clean() const { return findings.empty(); }
};

const char* finding_kind_name(FindingKind kind);

/// Shortest decimal that round-trips; integers print without a decimal point.
std::string format_number(double value);

/// One text line: eight coordinates, category, difficulty.
Instance parse_dota_line(const std::string& line, int line_number = 0);

/// Canonical emission: single spaces, shortest exact decimals, no trailing
/// whitespace, no newline.
std::string emit_dota_line(const Instance& inst);

/// Competition-style XML: table elements carrying four "x,y" coordinate
/// pairs (either a points/coords attribute on the element or on a Coords
/// child). Points are taken in document order; category "table",
/// difficulty 0.
ImageAnnotation parse_icdar_xml(const std::string& xml, const std::string& image_id = "");

/// Automated constraint checks: clockwise order, start-point heuristic for
/// near-axis-aligned quads, degeneracy, bounds (when image_size is known).
ValidationReport validate(const ImageAnnotation& ann, double bounds_margin = 0.0);

/// Cyclic rotation of the vertex list starting at index k (0..3).
Quad reorder_start(const Quad& q, int k);

/// Axis-aligned envelope as a screen-clockwise quad TL,TR,BR,BL.
Quad obb_to_hbb(const Quad& q);

}  // namespace obbtable::annot
