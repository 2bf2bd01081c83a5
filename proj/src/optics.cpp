#include "pilotmz/optics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace pilotmz {

namespace {

constexpr double kTimeTol = 1e-12;
constexpr double kDeadCoeff = 1e-14;
constexpr double kPathTol = 1e-9;
constexpr double kSqrt2 = 1.4142135623730950488;

Vec2 reflect(const Vec2& v, const Vec2& n) {
    return v - 2.0 * v.dot(n) * n;
}

struct Station {
    int element = -1; // -1: marker interaction point
    Vec2 position;
};

struct Arrival {
    double t;
    int station;
    int branch;
    bool operator>(const Arrival& o) const {
        if (t != o.t) return t > o.t;
        if (station != o.station) return station > o.station;
        return branch > o.branch;
    }
};

/// Nearest station strictly ahead of the leg start, skipping the first
/// `skip` hits (used to pass through transparent elements).
std::optional<Arrival> next_station(const std::vector<Station>& stations,
                                    const Branch& b, int skip) {
    const Vec2 v = b.packet.group_velocity();
    const double speed = v.norm();
    if (speed <= 0.0) return std::nullopt;
    const Vec2 dir = v / speed;
    std::vector<std::pair<double, int>> hits;
    for (std::size_t s = 0; s < stations.size(); ++s) {
        const Vec2 w = stations[s].position - b.packet.center0;
        const double forward = w.dot(dir);
        if (forward < kPathTol) continue;
        const Vec2 off = w - forward * dir;
        if (off.norm() > kPathTol * std::max(1.0, forward)) continue;
        hits.emplace_back(forward, static_cast<int>(s));
    }
    std::sort(hits.begin(), hits.end());
    if (static_cast<std::size_t>(skip) >= hits.size()) return std::nullopt;
    const auto& [dist, s] = hits[static_cast<std::size_t>(skip)];
    return Arrival{b.packet.birth_time + dist / speed, s, b.id};
}

struct Builder {
    const Layout& layout;
    const MarkerModel& marker;
    BranchTimeline tl;
    std::vector<Station> stations;
    std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> queue;
    std::vector<int> skip_count; // per branch: transparent stations passed
    bool marker_fired = false;

    explicit Builder(const Layout& l, const MarkerModel& m)
        : layout(l), marker(m) {}

    Branch& branch(int id) { return tl.branches[static_cast<std::size_t>(id)]; }

    int add_branch(Branch b) {
        b.id = static_cast<int>(tl.branches.size());
        if (b.id >= 64)
            throw std::invalid_argument("layout unrolls into too many branches");
        tl.branches.push_back(std::move(b));
        skip_count.push_back(0);
        return tl.branches.back().id;
    }

    void enqueue(int id) {
        const auto arr = next_station(stations, branch(id), skip_count[static_cast<std::size_t>(id)]);
        if (arr) queue.push(*arr);
    }

    void check_endpoint(const Element& e, double t) {
        if (!e.scheduled()) return;
        if (std::abs(t - e.active_from) < kTimeTol ||
            std::abs(t - e.active_to) < kTimeTol)
            throw std::invalid_argument(
                "ambiguous schedule: packet arrives at an activity endpoint");
    }

    void process_marker(double t, int branch_id) {
        if (branch(branch_id).channel != marker.placement_channel) {
            ++skip_count[static_cast<std::size_t>(branch_id)];
            enqueue(branch_id);
            return;
        }
        if (marker_fired)
            throw std::invalid_argument("marker would interact twice");
        marker_fired = true;
        branch(branch_id).t1 = t;
        tl.marker_event = MarkerEventInfo{t, branch_id};
        const Branch parent = branch(branch_id); // snapshot: add_branch reallocates

        // Daughters keep the parent packet, so their station list from
        // center0 still contains this marker point; skip past it.
        const int parent_skip = skip_count[static_cast<std::size_t>(branch_id)] + 1;
        auto child_of = [&](MarkerLabel label, EventKind kind, double amp) {
            Branch c;
            c.parent = parent.id;
            c.packet = parent.packet;
            c.coefficient = parent.coefficient * amp;
            c.label = label;
            c.channel = parent.channel;
            c.t0 = t;
            c.history = parent.history;
            c.history.push_back({-1, kind, Cplx(amp, 0.0), t});
            return c;
        };
        auto spawn = [&](Branch&& c) {
            const int id = add_branch(std::move(c));
            skip_count[static_cast<std::size_t>(id)] = parent_skip;
            enqueue(id);
        };

        if (marker.kind == MarkerKind::discrete) {
            const double a = marker.amp_flip();
            const double b = marker.amp_keep();
            if (b > kDeadCoeff)
                spawn(child_of(MarkerLabel::up, EventKind::marked_keep, b));
            if (a > kDeadCoeff)
                spawn(child_of(MarkerLabel::down, EventKind::marked_flip, a));
        } else if (marker.kind == MarkerKind::pointer) {
            tl.pointer = make_pointer_pair(marker, t);
            spawn(child_of(MarkerLabel::pointer_fired, EventKind::pointer_kick, 1.0));
        }
    }

    void process_detector(const Element& e, const std::vector<int>& ids) {
        for (int id : ids) branch(id).terminal_detector = e.label;
    }

    void process_mirror(const Element& e, int element_index, double t,
                        const std::vector<int>& ids) {
        for (int id : ids) {
            Branch& parent = branch(id);
            parent.t1 = t;
            Branch c;
            c.parent = parent.id;
            c.packet = parent.packet;
            c.packet.center0 = e.position;
            c.packet.birth_time = t;
            c.packet.wavevector = reflect(parent.packet.wavevector, e.normal);
            c.coefficient = parent.coefficient * layout.reflection_phase;
            c.label = parent.label;
            c.channel = parent.channel;
            c.t0 = t;
            c.history = parent.history;
            c.history.push_back(
                {element_index, EventKind::reflected, layout.reflection_phase, t});
            enqueue(add_branch(std::move(c)));
        }
    }

    void process_splitter(const Element& e, int element_index, double t,
                          const std::vector<int>& ids) {
        struct Candidate {
            Vec2 dir;
            MarkerLabel label;
            Cplx coeff;
            int from;
            EventKind kind;
            Cplx factor;
            int channel;
        };
        std::vector<Candidate> cands;
        const Branch first = branch(ids.front()); // snapshot: add_branch reallocates
        const double k_mag = first.packet.wavevector.norm();
        const double sigma_amp = first.packet.sigma(t);
        for (int id : ids) {
            const Branch& in = branch(id);
            if (in.label != first.label)
                throw std::invalid_argument(
                    "marked branches meeting an active splitter are not supported");
            if (std::abs(in.packet.sigma(t) - sigma_amp) > 1e-12 ||
                std::abs(in.packet.wavevector.norm() - k_mag) > 1e-9)
                throw std::invalid_argument(
                    "splitter inputs with mismatched packets");
            const Vec2 dir = in.packet.group_velocity() / in.packet.group_velocity().norm();
            const Vec2 rdir = reflect(dir, e.normal);
            const int ch_t = (in.channel == 0) ? 2 : in.channel;
            const int ch_r = (in.channel == 0) ? 1 : in.channel;
            cands.push_back({dir, in.label, in.coefficient * e.tau, id,
                             EventKind::transmitted, Cplx(e.tau, 0.0), ch_t});
            cands.push_back({rdir, in.label, in.coefficient * e.rho *
                                                 layout.reflection_phase,
                             id, EventKind::reflected,
                             e.rho * layout.reflection_phase, ch_r});
        }

        // Input-side CDF must be captured before the inputs are retired.
        const Vec2 d0 = first.packet.group_velocity() /
                        first.packet.group_velocity().norm();
        const Vec2 e_u_raw = d0 - reflect(d0, e.normal); // +u = transmitted side
        const Vec2 e_u = e_u_raw / e_u_raw.norm();

        SplitEvent ev;
        ev.t = t;
        ev.element = element_index;
        ev.origin = e.position;
        ev.e_u = e_u;
        ev.sigma_amp = sigma_amp;
        ev.parents = ids;
        if (ids.size() == 1) {
            ev.analytic_input = true;
        } else {
            ev.analytic_input = false;
            const int n = 16384;
            const double span = 10.0 * sigma_amp;
            const double du = 2.0 * span / n;
            std::vector<double> density(static_cast<std::size_t>(n) + 1);
            for (int i = 0; i <= n; ++i) {
                const double u = -span + i * du;
                const Vec2 r = e.position + u * e_u;
                Cplx sum = 0.0;
                for (int id : ids) {
                    const Branch& in = branch(id);
                    sum += in.coefficient * in.packet.evaluate(r, t);
                }
                density[static_cast<std::size_t>(i)] = std::norm(sum);
            }
            ev.input_cdf = stats::TabulatedCdf(-span, du, std::move(density));
        }

        for (int id : ids) branch(id).t1 = t;

        // Merge coherent output groups (same direction and label).
        std::vector<Candidate> groups;
        for (const auto& c : cands) {
            bool found = false;
            for (auto& g : groups) {
                if ((g.dir - c.dir).norm() < 1e-9 && g.label == c.label) {
                    g.coeff += c.coeff;
                    if (g.channel != c.channel) g.channel = 0;
                    g.kind = EventKind::merged;
                    found = true;
                    break;
                }
            }
            if (!found) groups.push_back(c);
        }

        struct Daughter {
            int id;
            double u_dot;
            double weight;
        };
        std::vector<Daughter> daughters;
        double total_weight = 0.0;
        for (const auto& g : groups) {
            if (std::abs(g.coeff) < kDeadCoeff) continue;
            Branch c;
            c.parent = g.from;
            c.packet = branch(g.from).packet;
            c.packet.center0 = e.position;
            c.packet.birth_time = t;
            c.packet.wavevector = g.dir * k_mag;
            c.coefficient = g.coeff;
            c.label = g.label;
            c.channel = g.channel;
            c.t0 = t;
            if (g.kind == EventKind::merged) {
                c.history.push_back({element_index, EventKind::merged, g.coeff, t});
            } else {
                c.history = branch(g.from).history;
                c.history.push_back({element_index, g.kind, g.factor, t});
            }
            const int id = add_branch(std::move(c));
            const double u_dot = (g.dir * k_mag).dot(e_u) / first.packet.mass;
            const double w = std::norm(g.coeff);
            daughters.push_back({id, u_dot, w});
            total_weight += w;
            enqueue(id);
        }
        if (daughters.empty())
            throw std::invalid_argument("splitter extinguished all branches");

        std::sort(daughters.begin(), daughters.end(),
                  [](const Daughter& a, const Daughter& b) {
                      return a.u_dot < b.u_dot;
                  });
        double q = 0.0;
        for (const auto& d : daughters) {
            const double w = d.weight / total_weight;
            ev.bands.push_back({q, q + w, d.id});
            q += w;
        }
        ev.bands.back().q1 = 1.0;

        if (daughters.size() >= 2) {
            const double du_dot = daughters.back().u_dot - daughters.front().u_dot;
            const GaussianPacket2D& p = tl.branches[static_cast<std::size_t>(daughters.front().id)].packet;
            double lo = t;
            double hi = t + 1.0;
            while (du_dot * (hi - t) < 10.0 * p.sigma(hi)) hi += 1.0;
            for (int i = 0; i < 80; ++i) {
                const double mid = 0.5 * (lo + hi);
                if (du_dot * (mid - t) < 10.0 * p.sigma(mid))
                    lo = mid;
                else
                    hi = mid;
            }
            ev.release_time = 0.5 * (lo + hi);
        } else {
            ev.release_time = t;
        }
        tl.splits.push_back(std::move(ev));
    }

    BranchTimeline build() {
        for (std::size_t i = 0; i < layout.elements.size(); ++i)
            stations.push_back({static_cast<int>(i), layout.elements[i].position});
        if (marker.kind != MarkerKind::none)
            stations.push_back({-1, marker.interaction_position});

        tl.source_birth = layout.source.birth_time;
        tl.t_end = layout.t_end;
        Branch src;
        src.packet = layout.source;
        src.coefficient = {1.0, 0.0};
        src.label = marker.initial_label();
        src.channel = 0;
        src.t0 = layout.source.birth_time;
        enqueue(add_branch(std::move(src)));

        while (!queue.empty()) {
            const Arrival head = queue.top();
            queue.pop();
            if (!branch(head.branch).alive_at(head.t) &&
                branch(head.branch).t1 <= head.t)
                continue; // superseded leg
            std::vector<int> ids{head.branch};
            while (!queue.empty() && queue.top().station == head.station &&
                   std::abs(queue.top().t - head.t) <= kTimeTol) {
                ids.push_back(queue.top().branch);
                queue.pop();
            }
            std::sort(ids.begin(), ids.end());

            const Station& st = stations[static_cast<std::size_t>(head.station)];
            if (st.element < 0) {
                for (int id : ids) process_marker(head.t, id);
                continue;
            }
            const Element& e = layout.elements[static_cast<std::size_t>(st.element)];
            check_endpoint(e, head.t);
            switch (e.kind) {
                case ElementKind::detector:
                    process_detector(e, ids);
                    break;
                case ElementKind::mirror:
                    process_mirror(e, st.element, head.t, ids);
                    break;
                case ElementKind::beam_splitter:
                    if (!e.active_at(head.t)) {
                        for (int id : ids) {
                            ++skip_count[static_cast<std::size_t>(id)];
                            enqueue(id);
                        }
                    } else {
                        process_splitter(e, st.element, head.t, ids);
                    }
                    break;
            }
        }
        std::sort(tl.splits.begin(), tl.splits.end(),
                  [](const SplitEvent& a, const SplitEvent& b) { return a.t < b.t; });
        return std::move(tl);
    }
};

} // namespace

double SplitEvent::input_quantile(double u) const {
    if (analytic_input) {
        const double z = u * kSqrt2 / sigma_amp;
        return stats::normal_cdf(z);
    }
    return input_cdf.cdf(u);
}

const SplitBand& SplitEvent::band_of(double q) const {
    for (const auto& b : bands)
        if (q < b.q1 || &b == &bands.back()) return b;
    return bands.back();
}

double SplitEvent::output_u(double q) const {
    const SplitBand& b = band_of(q);
    double local = (q - b.q0) / (b.q1 - b.q0);
    local = std::min(std::max(local, 1e-15), 1.0 - 1e-15);
    return sigma_amp / kSqrt2 * stats::inverse_normal_cdf(local);
}

std::vector<const Branch*> BranchTimeline::alive(double t) const {
    std::vector<const Branch*> out;
    for (const auto& b : branches)
        if (b.alive_at(t)) out.push_back(&b);
    return out;
}

std::vector<const Branch*> BranchTimeline::alive_descendants(int id,
                                                             double t) const {
    std::vector<const Branch*> out;
    for (const auto& b : branches) {
        if (!b.alive_at(t)) continue;
        int cur = b.id;
        while (cur >= 0) {
            if (cur == id) {
                out.push_back(&b);
                break;
            }
            cur = branches[static_cast<std::size_t>(cur)].parent;
        }
    }
    return out;
}

std::vector<double> BranchTimeline::event_times() const {
    std::vector<double> ts;
    for (const auto& b : branches)
        if (b.t0 > source_birth) ts.push_back(b.t0);
    for (const auto& s : splits) {
        ts.push_back(s.t);
        if (s.release_time > s.t) ts.push_back(s.release_time);
    }
    if (marker_event) ts.push_back(marker_event->t);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::abs(a - b) < kTimeTol; }),
             ts.end());
    return ts;
}

const SplitEvent* BranchTimeline::split_at(double t) const {
    for (const auto& s : splits)
        if (std::abs(s.t - t) <= kTimeTol) return &s;
    return nullptr;
}

BranchTimeline build_timeline(const Layout& layout, const MarkerModel& marker) {
    Builder b(layout, marker);
    return b.build();
}

FieldEval superpose(const std::vector<const Branch*>& branches,
                    const std::vector<Cplx>& factors, const Vec2& r, double t) {
    FieldEval out{};
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const Cplx w = branches[i]->coefficient * factors[i];
        if (w == Cplx(0.0)) continue;
        const PacketEval e = branches[i]->packet.eval_all(r, t);
        out.psi += w * e.psi;
        out.ddx += w * e.ddx;
        out.ddy += w * e.ddy;
        out.lap += w * e.lap;
    }
    return out;
}

double peak_scale(const std::vector<const Branch*>& branches,
                  const std::vector<Cplx>& factors, double t) {
    double scale = 0.0;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const double s = std::abs(branches[i]->coefficient) *
                         std::abs(factors[i]) *
                         branches[i]->packet.peak_modulus(t);
        scale = std::max(scale, s);
    }
    return scale;
}

} // namespace pilotmz
