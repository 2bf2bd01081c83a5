#include "pilotmz/svgplot.hpp"

#include <cstdio>

namespace pilotmz {

namespace {

constexpr double kWorldLo = -8.0;
constexpr double kWorldHi = 28.0;
constexpr int kCanvas = 720;

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

double px(double x) {
    return (x - kWorldLo) / (kWorldHi - kWorldLo) * kCanvas;
}

double py(double y) {
    return kCanvas - (y - kWorldLo) / (kWorldHi - kWorldLo) * kCanvas;
}

std::string diagonal_stroke(const Vec2& center, double half_len,
                            const std::string& cls) {
    const Vec2 d{half_len * 0.70710678118654752440,
                 half_len * 0.70710678118654752440};
    std::string s = "<line class=\"" + cls + "\" x1=\"";
    s += fmt2(px(center.x - d.x)) + "\" y1=\"" + fmt2(py(center.y - d.y));
    s += "\" x2=\"" + fmt2(px(center.x + d.x)) + "\" y2=\"" +
         fmt2(py(center.y + d.y)) + "\"/>\n";
    return s;
}

std::string label_text(const Vec2& at, const std::string& text) {
    return "<text class=\"lbl\" x=\"" + fmt2(px(at.x) + 8.0) + "\" y=\"" +
           fmt2(py(at.y) - 8.0) + "\">" + text + "</text>\n";
}

} // namespace

std::string render_svg(const Scenario& scen,
                       const std::vector<TrajectoryRecord>& records, int cap) {
    const Layout& lay = scen.layout;
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" "
           "height=\"720\" viewBox=\"0 0 720 720\">\n";
    svg += "<style>\n"
           ".bg{fill:#ffffff;}\n"
           ".splitter{stroke:#00798c;stroke-width:3;}\n"
           ".splitter-off{stroke:#00798c;stroke-width:3;stroke-dasharray:6 5;}\n"
           ".mirror{stroke:#30323d;stroke-width:4;}\n"
           ".detector{stroke:#30323d;stroke-width:2;fill:none;}\n"
           ".marker-dot{fill:#7b2d8b;}\n"
           ".source-dot{fill:#30323d;}\n"
           ".lbl{font:14px sans-serif;fill:#30323d;}\n"
           ".ch1{stroke:#0072b2;stroke-width:0.6;fill:none;opacity:0.35;}\n"
           ".ch2{stroke:#d55e00;stroke-width:0.6;fill:none;opacity:0.35;}\n"
           ".flagged{stroke:#999999;stroke-width:0.6;fill:none;opacity:0.5;}\n"
           "</style>\n";
    svg += "<rect class=\"bg\" x=\"0\" y=\"0\" width=\"720\" height=\"720\"/>\n";

    int emitted = 0;
    for (const auto& rec : records) {
        if (rec.samples.empty()) continue;
        if (emitted >= cap) break;
        ++emitted;
        std::string cls = rec.channel == 1 ? "ch1" : "ch2";
        if (rec.flag != TrajectoryFlag::clean) cls = "flagged";
        svg += "<polyline class=\"" + cls + "\" points=\"";
        for (const auto& s : rec.samples) {
            svg += fmt2(px(s.q.r.x));
            svg += ',';
            svg += fmt2(py(s.q.r.y));
            svg += ' ';
        }
        svg += "\"/>\n";
    }

    const double arrival = 24.0 / scen.spec.speed;
    for (const auto& e : lay.elements) {
        switch (e.kind) {
            case ElementKind::beam_splitter:
                svg += diagonal_stroke(
                    e.position, 1.5,
                    e.active_at(arrival) ? "splitter" : "splitter-off");
                break;
            case ElementKind::mirror:
                svg += diagonal_stroke(e.position, 1.5, "mirror");
                break;
            case ElementKind::detector:
                svg += "<circle class=\"detector\" cx=\"" + fmt2(px(e.position.x)) +
                       "\" cy=\"" + fmt2(py(e.position.y)) + "\" r=\"" +
                       fmt2(lay.detector_radius / (kWorldHi - kWorldLo) * kCanvas) +
                       "\"/>\n";
                break;
        }
        if (!e.label.empty()) svg += label_text(e.position, e.label);
    }

    svg += "<circle class=\"source-dot\" cx=\"" + fmt2(px(lay.source.center0.x)) +
           "\" cy=\"" + fmt2(py(lay.source.center0.y)) + "\" r=\"4\"/>\n";
    if (scen.marker.kind != MarkerKind::none) {
        svg += "<circle class=\"marker-dot\" cx=\"" +
               fmt2(px(scen.marker.interaction_position.x)) + "\" cy=\"" +
               fmt2(py(scen.marker.interaction_position.y)) + "\" r=\"5\"/>\n";
        svg += label_text(scen.marker.interaction_position, "marker");
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace pilotmz
