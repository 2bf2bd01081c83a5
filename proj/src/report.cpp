#include "pilotmz/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "pilotmz/pilotwave.hpp"

namespace pilotmz {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void kv(std::string& out, const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
}

void kv(std::string& out, const std::string& key, int value) {
    kv(out, key, std::to_string(value));
}

void kv(std::string& out, const std::string& key, double value) {
    kv(out, key, fmt17(value));
}

double fraction(int part, int total) {
    return total > 0 ? static_cast<double>(part) / total : 0.0;
}

} // namespace

std::string render_report(const RunConfig& cfg, const RunReport& rep) {
    std::string out = serialize_spec(cfg);
    kv(out, "flagged", rep.flagged);
    kv(out, "flag_budget_ok", std::string(rep.flag_budget_ok() ? "true" : "false"));
    kv(out, "absorbed", rep.absorbed);
    kv(out, "crossing_count", rep.crossing_count);
    for (std::size_t i = 0; i < rep.detector_labels.size(); ++i)
        kv(out, "count." + rep.detector_labels[i], rep.port_counts[i]);
    for (const auto& label : rep.detector_labels)
        kv(out, "p." + label, rep.probability(label));
    for (int c : {1, 2}) {
        const ChannelTally& tally = rep.channels[static_cast<std::size_t>(c)];
        const std::string prefix = "channel" + std::to_string(c);
        kv(out, prefix + ".total", tally.total);
        kv(out, prefix + ".straight", tally.straight);
        kv(out, prefix + ".swapped", tally.swapped);
        kv(out, prefix + ".straight_fraction", fraction(tally.straight, tally.total));
    }
    for (const auto& j : rep.joints)
        kv(out, "joint." + j.detector + "." + j.beable, j.count);
    kv(out, "config_hash", config_hash_hex(cfg));
    return out;
}

std::string render_trajectories_csv(const MarkerModel& marker,
                                    const std::vector<TrajectoryRecord>& records,
                                    int cap) {
    const bool pointer = marker.kind == MarkerKind::pointer;
    std::string out = pointer ? "trajectory_id,t,x,y,pointer_y,flag\n"
                              : "trajectory_id,t,x,y,flag\n";
    int emitted = 0;
    for (const auto& rec : records) {
        if (rec.samples.empty()) continue;
        if (emitted >= cap) break;
        ++emitted;
        const int flag = rec.flag == TrajectoryFlag::clean ? 0 : 1;
        for (const auto& s : rec.samples) {
            out += std::to_string(rec.id);
            out += ',';
            out += fmt17(s.t);
            out += ',';
            out += fmt17(s.q.r.x);
            out += ',';
            out += fmt17(s.q.r.y);
            if (pointer) {
                out += ',';
                out += fmt17(s.q.pointer_y ? *s.q.pointer_y : 0.0);
            }
            out += ',';
            out += std::to_string(flag);
            out += '\n';
        }
    }
    return out;
}

std::string render_fields_csv(const Layout& layout, const BranchTimeline& tl,
                              const MarkerModel& marker, double t) {
    ParticleState probe;
    if (marker.kind == MarkerKind::discrete)
        probe.beable.discrete = MarkerLabel::up;
    else if (marker.kind == MarkerKind::pointer)
        probe.q.pointer_y = 0.0;

    const int n = 161;
    const Vec2 c = layout.overlap_center;
    const double r = layout.overlap_radius;
    std::string out = "x,y,Q,R2\n";
    for (int i = 0; i < n; ++i) {
        const double x = c.x - r + 2.0 * r * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double y = c.y - r + 2.0 * r * j / (n - 1);
            probe.q.r = {x, y};
            double q = std::numeric_limits<double>::quiet_NaN();
            double r2 = 0.0;
            try {
                const CondEval ev = conditional_eval(tl, marker, probe, t);
                r2 = std::norm(ev.psi);
                q = quantum_potential(tl, marker, probe, t);
            } catch (const std::exception&) {
                q = std::numeric_limits<double>::quiet_NaN();
            }
            if (!std::isfinite(q)) q = std::numeric_limits<double>::quiet_NaN();
            out += fmt17(x);
            out += ',';
            out += fmt17(y);
            out += ',';
            out += fmt17(q);
            out += ',';
            out += fmt17(r2);
            out += '\n';
        }
    }
    return out;
}

} // namespace pilotmz
