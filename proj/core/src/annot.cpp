#include "obbtable/annot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace obbtable::annot {

namespace {

constexpr double kAxisAlignedTolDeg = 5.0;

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> tokens;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

double parse_double(const std::string& tok, int line_number, const char* what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
        throw ParseError(std::string("non-numeric ") + what + ": '" + tok + "'", line_number);
    }
    return value;
}

int parse_int(const std::string& tok, int line_number, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(std::string("non-integer ") + what + ": '" + tok + "'", line_number);
    }
    return value;
}

}  // namespace

const char* finding_kind_name(FindingKind kind) {
    switch (kind) {
        case FindingKind::Counterclockwise: return "counterclockwise";
        case FindingKind::StartPointSuspect: return "start-point-suspect";
        case FindingKind::Degenerate: return "degenerate";
        case FindingKind::OutOfBounds: return "out-of-bounds";
    }
    return "unknown";
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

Instance parse_dota_line(const std::string& line, int line_number) {
    const std::vector<std::string> tokens = split_ws(line);
    if (tokens.size() != 10) {
        throw ParseError("expected 10 tokens (8 coordinates, category, difficulty), got " +
                             std::to_string(tokens.size()),
                         line_number);
    }
    double coords[8];
    for (int i = 0; i < 8; ++i) {
        coords[i] = parse_double(tokens[i], line_number, "coordinate");
    }
    Instance inst;
    inst.quad = Quad{{coords[0], coords[1]},
                     {coords[2], coords[3]},
                     {coords[4], coords[5]},
                     {coords[6], coords[7]}};
    inst.category = tokens[8];
    inst.difficulty = parse_int(tokens[9], line_number, "difficulty");
    return inst;
}

std::string emit_dota_line(const Instance& inst) {
    std::string out;
    for (const Point& p : inst.quad.v) {
        out += format_number(p.x);
        out += ' ';
        out += format_number(p.y);
        out += ' ';
    }
    out += inst.category;
    out += ' ';
    out += std::to_string(inst.difficulty);
    return out;
}

namespace {

using boost::property_tree::ptree;

std::optional<std::string> coords_attr(const ptree& node) {
    if (auto attrs = node.get_child_optional("<xmlattr>")) {
        for (const char* name : {"points", "coords"}) {
            if (auto v = attrs->get_optional<std::string>(name)) return *v;
        }
    }
    return std::nullopt;
}

Quad parse_point_pairs(const std::string& text) {
    std::vector<Point> pts;
    for (const std::string& pair : split_ws(text)) {
        const auto comma = pair.find(',');
        if (comma == std::string::npos) {
            throw IngestError("table element: coordinate pair '" + pair + "' missing comma");
        }
        try {
            pts.push_back({parse_double(pair.substr(0, comma), 0, "coordinate"),
                           parse_double(pair.substr(comma + 1), 0, "coordinate")});
        } catch (const ParseError& e) {
            throw IngestError(std::string("table element: ") + e.what());
        }
    }
    if (pts.size() != 4) {
        throw IngestError("table element: expected 4 coordinate pairs, got " +
                          std::to_string(pts.size()));
    }
    return {pts[0], pts[1], pts[2], pts[3]};
}

void collect_tables(const ptree& node, std::vector<Instance>& out) {
    for (const auto& [name, child] : node) {
        if (name == "<xmlattr>") continue;
        if (name == "table") {
            std::optional<std::string> coords = coords_attr(child);
            if (!coords) {
                // competition schema nests the points in a Coords child
                for (const auto& [cname, cchild] : child) {
                    if (cname == "Coords") {
                        coords = coords_attr(cchild);
                        if (coords) break;
                    }
                }
            }
            if (!coords) {
                throw IngestError("table element missing coordinate attribute");
            }
            Instance inst;
            inst.quad = parse_point_pairs(*coords);
            out.push_back(std::move(inst));
        }
        collect_tables(child, out);
    }
}

}  // namespace

ImageAnnotation parse_icdar_xml(const std::string& xml, const std::string& image_id) {
    ptree tree;
    try {
        std::istringstream in(xml);
        boost::property_tree::read_xml(in, tree);
    } catch (const boost::property_tree::xml_parser_error& e) {
        throw IngestError(std::string("malformed XML: ") + e.what());
    }
    ImageAnnotation ann;
    ann.image_id = image_id;
    collect_tables(tree, ann.instances);
    return ann;
}

ValidationReport validate(const ImageAnnotation& ann, double bounds_margin) {
    ValidationReport report;
    for (std::size_t i = 0; i < ann.instances.size(); ++i) {
        const Instance& inst = ann.instances[i];
        const Quad& q = inst.quad;

        bool finite = true;
        for (const Point& p : q.v) finite = finite && geometry::is_finite(p);
        if (!finite) {
            report.findings.push_back({i, FindingKind::Degenerate, "non-finite coordinate"});
            continue;
        }

        const double area = geometry::signed_area(q);
        if (area == 0.0 || !geometry::quad_is_valid(q)) {
            if (area < 0.0) {
                report.findings.push_back(
                    {i, FindingKind::Counterclockwise,
                     "signed area " + format_number(area) + " (vertices counterclockwise)"});
            }
            report.findings.push_back(
                {i, FindingKind::Degenerate, "zero area or non-convex quad"});
            continue;
        }
        if (area < 0.0) {
            report.findings.push_back(
                {i, FindingKind::Counterclockwise,
                 "signed area " + format_number(area) + " (vertices counterclockwise)"});
        }
        // start-point heuristic, only for near-axis-aligned quads (A->B
        // within +-5 degrees of 0); rotated content is left to a human
        const geometry::AngleDeg angle = geometry::quad_angle(q);
        if (geometry::angle_diff(angle, geometry::AngleDeg(0.0)) <= kAxisAlignedTolDeg) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < 4; ++k) {
                if (q.v[k].x + q.v[k].y < q.v[best].x + q.v[best].y) best = k;
            }
            if (best != 0) {
                report.findings.push_back(
                    {i, FindingKind::StartPointSuspect,
                     "vertex " + std::to_string(best) + " is top-left, not A"});
            }
        }

        if (ann.image_size) {
            const double w = ann.image_size->width;
            const double h = ann.image_size->height;
            for (const Point& p : q.v) {
                if (p.x < -bounds_margin || p.x > w + bounds_margin || p.y < -bounds_margin ||
                    p.y > h + bounds_margin) {
                    report.findings.push_back(
                        {i, FindingKind::OutOfBounds,
                         "vertex (" + format_number(p.x) + "," + format_number(p.y) +
                             ") outside " + std::to_string(ann.image_size->width) + "x" +
                             std::to_string(ann.image_size->height)});
                    break;
                }
            }
        }
    }
    return report;
}

Quad reorder_start(const Quad& q, int k) {
    if (k < 0 || k > 3) {
        throw std::out_of_range("reorder_start: index must be in 0..3");
    }
    Quad out;
    for (int i = 0; i < 4; ++i) out.v[i] = q.v[(i + k) % 4];
    return out;
}

Quad obb_to_hbb(const Quad& q) {
    double min_x = q.v[0].x, max_x = q.v[0].x;
    double min_y = q.v[0].y, max_y = q.v[0].y;
    for (const Point& p : q.v) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    return {{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}};
}

}  // namespace obbtable::annot
