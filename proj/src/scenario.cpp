#include "pilotmz/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pilotmz {

namespace {

constexpr double kCrossingHysteresis = 0.05; // in units of sigma0

/// Distance from point p to the forward ray origin + s*dir, s >= 0.
double ray_distance(const Vec2& origin, const Vec2& dir, const Vec2& p) {
    const Vec2 d = p - origin;
    const double s = d.dot(dir);
    if (s <= 0.0) return d.norm();
    return (d - s * dir).norm();
}

const Element* nearest_detector_on_ray(const Layout& layout, const Vec2& origin,
                                       const Vec2& dir) {
    const Element* best = nullptr;
    double best_dist = 0.0;
    for (const auto& e : layout.elements) {
        if (e.kind != ElementKind::detector) continue;
        const double dist = ray_distance(origin, dir, e.position);
        if (best == nullptr || dist < best_dist) {
            best = &e;
            best_dist = dist;
        }
    }
    return best;
}

std::string beable_string(const MarkerModel& marker, const BranchTimeline& tl,
                          const TrajectoryRecord& rec) {
    if (marker.kind == MarkerKind::discrete) {
        if (!rec.beable.discrete) return "-";
        return *rec.beable.discrete == MarkerLabel::down ? "down" : "up";
    }
    if (marker.kind == MarkerKind::pointer) {
        if (!tl.pointer || !rec.beable.pointer_y) return "quiet";
        const double threshold = 0.5 * tl.pointer->separation(tl.t_end);
        return *rec.beable.pointer_y > threshold ? "excited" : "quiet";
    }
    return "-";
}

std::vector<std::string> beable_values(const MarkerModel& marker) {
    if (marker.kind == MarkerKind::discrete) return {"up", "down"};
    if (marker.kind == MarkerKind::pointer) return {"quiet", "excited"};
    return {};
}

} // namespace

const char* scenario_name_string(ScenarioName name) {
    switch (name) {
        case ScenarioName::wheeler_open: return "wheeler_open";
        case ScenarioName::wheeler_closed: return "wheeler_closed";
        case ScenarioName::wheeler_delayed: return "wheeler_delayed";
        case ScenarioName::essw_spin: return "essw_spin";
        case ScenarioName::av_pointer: return "av_pointer";
    }
    return "wheeler_open";
}

bool parse_scenario_name(const std::string& text, ScenarioName& out) {
    for (ScenarioName n : {ScenarioName::wheeler_open, ScenarioName::wheeler_closed,
                           ScenarioName::wheeler_delayed, ScenarioName::essw_spin,
                           ScenarioName::av_pointer}) {
        if (text == scenario_name_string(n)) {
            out = n;
            return true;
        }
    }
    return false;
}

Scenario build_scenario(const ScenarioSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("ensemble size must be positive");
    if (spec.sigma0 <= 0.0 || spec.mass <= 0.0 || spec.speed <= 0.0)
        throw std::invalid_argument("packet parameters must be positive");
    if (spec.rtol <= 0.0 || spec.atol <= 0.0)
        throw std::invalid_argument("integrator tolerances must be positive");
    if (spec.efficiency_sq < 0.0 || spec.efficiency_sq > 1.0)
        throw std::invalid_argument("marker efficiency must lie in [0, 1]");
    if (spec.ejection_speed <= 0.0)
        throw std::invalid_argument("pointer ejection speed must be positive");

    Scenario scen;
    scen.spec = spec;
    Layout& lay = scen.layout;

    lay.source.center0 = {0.0, -4.0};
    lay.source.birth_time = 0.0;
    lay.source.spread_epoch = 0.0;
    lay.source.sigma0 = spec.sigma0;
    lay.source.mass = spec.mass;
    lay.source.wavevector = {0.0, spec.mass * spec.speed};

    Element bs1;
    bs1.kind = ElementKind::beam_splitter;
    bs1.position = {0.0, 0.0};
    bs1.label = "BS1";
    Element m1;
    m1.kind = ElementKind::mirror;
    m1.position = {10.0, 0.0};
    m1.label = "M1";
    Element m2 = m1;
    m2.position = {0.0, 10.0};
    m2.label = "M2";
    Element bs2 = bs1;
    bs2.position = {10.0, 10.0};
    bs2.label = "BS2";
    Element d1;
    d1.kind = ElementKind::detector;
    d1.position = {10.0, 22.0};
    d1.label = "D1";
    Element d2 = d1;
    d2.position = {22.0, 10.0};
    d2.label = "D2";

    const double t_arrival = 24.0 / spec.speed;
    switch (spec.name) {
        case ScenarioName::wheeler_open:
        case ScenarioName::essw_spin:
        case ScenarioName::av_pointer:
            bs2.active_from = 1e300;
            bs2.active_to = 1e300;
            break;
        case ScenarioName::wheeler_closed:
            bs2.active_from = -1e300;
            bs2.active_to = 1e300;
            break;
        case ScenarioName::wheeler_delayed:
            if (std::abs(spec.t_c - t_arrival) < 1e-9)
                throw std::invalid_argument(
                    "schedule switch coincides with the packet arrival at the "
                    "recombination splitter");
            if (spec.direction == ScheduleDirection::insert) {
                bs2.active_from = spec.t_c;
                bs2.active_to = 1e300;
            } else {
                bs2.active_from = -1e300;
                bs2.active_to = spec.t_c;
            }
            break;
    }

    lay.elements = {bs1, m1, m2, bs2, d1, d2};
    lay.overlap_center = {10.0, 10.0};
    lay.overlap_radius = 4.0 * spec.sigma0;
    lay.detector_radius = 2.0 * spec.sigma0;
    lay.t_end = 45.0 / spec.speed;

    if (spec.name == ScenarioName::essw_spin) {
        scen.marker.kind = MarkerKind::discrete;
        scen.marker.efficiency_sq = spec.efficiency_sq;
    } else if (spec.name == ScenarioName::av_pointer) {
        scen.marker.kind = MarkerKind::pointer;
        scen.marker.ejection_speed = spec.ejection_speed;
    }
    return scen;
}

std::string ballistic_detector(const Layout& layout, const BranchTimeline& tl,
                               int channel) {
    const Branch* beam = nullptr;
    for (const auto& b : tl.branches) {
        if (b.channel != channel) continue;
        const double speed = b.packet.group_velocity().norm();
        if (speed == 0.0) continue;
        const Vec2 dir = b.packet.group_velocity() / speed;
        if (ray_distance(b.packet.center0, dir, layout.overlap_center) >
            layout.overlap_radius)
            continue;
        if (beam == nullptr || b.t0 > beam->t0) beam = &b;
    }
    if (beam == nullptr)
        throw std::logic_error("no beam reaches the overlap on this channel");
    const Vec2 dir =
        beam->packet.group_velocity() / beam->packet.group_velocity().norm();
    const Element* det = nearest_detector_on_ray(layout, layout.overlap_center, dir);
    if (det == nullptr) throw std::logic_error("layout has no detectors");
    return det->label;
}

std::string effective_port(const Layout& layout, const BranchTimeline& tl,
                           const MarkerModel& marker,
                           const TrajectoryRecord& rec) {
    if (!rec.detector.empty()) return rec.detector;
    ParticleState s;
    s.q = rec.q_final;
    s.beable = rec.beable;
    s.channel = rec.channel;
    const VelocityEval v = velocity(tl, marker, s, tl.t_end);
    Vec2 dir = v.v;
    if (v.abs_psi == 0.0 || dir.norm() == 0.0)
        dir = rec.q_final.r - layout.overlap_center;
    dir = dir / dir.norm();
    const Element* det = nearest_detector_on_ray(layout, rec.q_final.r, dir);
    if (det == nullptr) throw std::logic_error("layout has no detectors");
    return det->label;
}

double RunReport::probability(const std::string& detector) const {
    for (std::size_t i = 0; i < detector_labels.size(); ++i)
        if (detector_labels[i] == detector)
            return unflagged() > 0
                       ? static_cast<double>(port_counts[i]) / unflagged()
                       : 0.0;
    return 0.0;
}

bool RunReport::flag_budget_ok() const {
    return flagged * 100 <= static_cast<int>(records.size());
}

RunReport run_scenario(const Scenario& scen, const RunOptions& opt) {
    const BranchTimeline tl = build_timeline(scen.layout, scen.marker);

    EnsembleParams par;
    par.n = scen.spec.n;
    par.seed = scen.spec.seed;
    par.integrator.rtol = scen.spec.rtol;
    par.integrator.atol = scen.spec.atol;
    par.integrator.sample_dt = opt.sample_dt;
    par.checkpoint_times = opt.checkpoint_times;
    par.keep_sample_count = opt.keep_sample_count;

    RunReport rep;
    rep.spec = scen.spec;
    rep.records = opt.serial
                      ? run_ensemble_serial(scen.layout, tl, scen.marker, par)
                      : run_ensemble(scen.layout, tl, scen.marker, par);

    for (const auto& e : scen.layout.elements)
        if (e.kind == ElementKind::detector)
            rep.detector_labels.push_back(e.label);
    rep.port_counts.assign(rep.detector_labels.size(), 0);

    std::array<std::string, 3> ballistic;
    for (int c : {1, 2}) ballistic[static_cast<std::size_t>(c)] =
        ballistic_detector(scen.layout, tl, c);

    const std::vector<std::string> values = beable_values(scen.marker);
    for (const auto& label : rep.detector_labels)
        for (const auto& v : values) rep.joints.push_back({label, v, 0});

    const double cross_eps = kCrossingHysteresis * scen.spec.sigma0;
    for (const auto& rec : rep.records) {
        if (rec.flag != TrajectoryFlag::clean) {
            ++rep.flagged;
            rep.ports.emplace_back();
            rep.straight.push_back(false);
            rep.crossed.push_back(false);
            rep.beables.emplace_back();
            continue;
        }
        const std::string port = effective_port(scen.layout, tl, scen.marker, rec);
        const bool went_straight =
            rec.channel >= 1 && rec.channel <= 2 &&
            port == ballistic[static_cast<std::size_t>(rec.channel)];
        const bool did_cross = rec.min_u < -cross_eps && rec.max_u > cross_eps;
        const std::string outcome = beable_string(scen.marker, tl, rec);

        rep.ports.push_back(port);
        rep.straight.push_back(went_straight);
        rep.crossed.push_back(did_cross);
        rep.beables.push_back(outcome);

        if (!rec.detector.empty()) ++rep.absorbed;
        if (did_cross) ++rep.crossing_count;
        for (std::size_t i = 0; i < rep.detector_labels.size(); ++i)
            if (rep.detector_labels[i] == port) ++rep.port_counts[i];
        if (rec.channel >= 1 && rec.channel <= 2) {
            ChannelTally& tally = rep.channels[static_cast<std::size_t>(rec.channel)];
            ++tally.total;
            if (went_straight)
                ++tally.straight;
            else
                ++tally.swapped;
        }
        for (auto& j : rep.joints)
            if (j.detector == port && j.beable == outcome) ++j.count;
    }
    return rep;
}

double prefix_deviation(const std::vector<TrajectoryRecord>& a,
                        const std::vector<TrajectoryRecord>& b, double t_cut) {
    double worst = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& sa = a[i].samples;
        const auto& sb = b[i].samples;
        const std::size_t m = std::min(sa.size(), sb.size());
        for (std::size_t k = 0; k < m; ++k) {
            if (sa[k].t >= t_cut || sb[k].t >= t_cut) break;
            if (std::abs(sa[k].t - sb[k].t) > 1e-12) break;
            double d2 = (sa[k].q.r - sb[k].q.r).norm2();
            if (sa[k].q.pointer_y && sb[k].q.pointer_y) {
                const double dp = *sa[k].q.pointer_y - *sb[k].q.pointer_y;
                d2 += dp * dp;
            }
            worst = std::max(worst, std::sqrt(d2));
        }
    }
    return worst;
}

double overlap_entry_time(const Layout& layout, const BranchTimeline& tl) {
    double best = tl.t_end;
    for (const auto& b : tl.branches) {
        const double lo = b.t0;
        const double hi = std::min(b.t1, tl.t_end);
        if (hi <= lo) continue;
        auto outside = [&](double t) {
            const double gap =
                (b.packet.center(t) - layout.overlap_center).norm();
            return gap > layout.overlap_radius + 5.0 * b.packet.sigma(t);
        };
        if (!outside(lo)) {
            best = std::min(best, lo);
            continue;
        }
        // Coarse scan for the first entry, then bisect the bracketing step.
        const int steps = 1024;
        double prev = lo;
        bool found = false;
        double ta = lo, tb = hi;
        for (int i = 1; i <= steps; ++i) {
            const double t = lo + (hi - lo) * i / steps;
            if (!outside(t)) {
                ta = prev;
                tb = t;
                found = true;
                break;
            }
            prev = t;
        }
        if (!found) continue;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (ta + tb);
            if (outside(mid))
                ta = mid;
            else
                tb = mid;
        }
        best = std::min(best, tb);
    }
    return best;
}

} // namespace pilotmz
