#include "pilotmz/pilotwave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pilotmz {

namespace {

constexpr double kEventTol = 1e-12;

bool label_compatible(MarkerLabel label, const MarkerBeable& beable) {
    if (beable.discrete)
        return label == *beable.discrete || label == MarkerLabel::neutral;
    return true;
}

/// Pointer packets for a pointer model that never fired: only the rest packet
/// is ever referenced because no branch carries the fired label.
PointerPair never_fired_pair(const MarkerModel& marker) {
    return make_pointer_pair(marker, 0.0);
}

/// Coherent sum over a fixed branch set at one configuration. Pointer factors
/// multiply each branch by its pointer packet evaluated at the actual pointer
/// coordinate.
CondEval eval_branches(const std::vector<const Branch*>& branches,
                       const PointerPair* pair, const Configuration& q,
                       double t, bool pointer_mode) {
    CondEval out{};
    out.pointer_mode = pointer_mode;
    for (const Branch* b : branches) {
        Cplx f(1.0, 0.0);
        Cplx fd(0.0, 0.0);
        Cplx fdd(0.0, 0.0);
        double famp = 1.0;
        if (pointer_mode) {
            const GaussianPacket1D& pp = (b->label == MarkerLabel::pointer_fired)
                                             ? pair->fired
                                             : pair->rest;
            const GaussianPacket1D::Eval pe = pp.eval_all(*q.pointer_y, t);
            f = pe.phi;
            fd = pe.dd;
            fdd = pe.lap;
            famp = std::abs(pe.phi);
        }
        const Cplx w = b->coefficient * f;
        const PacketEval e = b->packet.eval_all(q.r, t);
        out.psi += w * e.psi;
        out.ddx += w * e.ddx;
        out.ddy += w * e.ddy;
        out.lap += w * e.lap;
        if (pointer_mode) {
            out.dp += b->coefficient * e.psi * fd;
            out.dpp += b->coefficient * e.psi * fdd;
        }
        out.scale = std::max(out.scale, std::abs(b->coefficient) *
                                            b->packet.peak_modulus(t) * famp);
    }
    return out;
}

} // namespace

std::vector<const Branch*> guiding_branches(const BranchTimeline& tl,
                                            const ParticleState& s, double t) {
    if (s.bound_branch >= 0 && t < s.bound_until)
        return tl.alive_descendants(s.bound_branch, t);
    std::vector<const Branch*> out;
    for (const Branch* b : tl.alive(t))
        if (label_compatible(b->label, s.beable)) out.push_back(b);
    return out;
}

CondEval conditional_eval(const BranchTimeline& tl, const MarkerModel& marker,
                          const ParticleState& s, double t) {
    const auto branches = guiding_branches(tl, s, t);
    const bool pm =
        marker.kind == MarkerKind::pointer && s.q.pointer_y.has_value();
    PointerPair fallback;
    const PointerPair* pair = tl.pointer ? &*tl.pointer : nullptr;
    if (pm && pair == nullptr) {
        fallback = never_fired_pair(marker);
        pair = &fallback;
    }
    return eval_branches(branches, pair, s.q, t, pm);
}

VelocityEval velocity(const BranchTimeline& tl, const MarkerModel& marker,
                      const ParticleState& s, double t) {
    const auto branches = guiding_branches(tl, s, t);
    const bool pm =
        marker.kind == MarkerKind::pointer && s.q.pointer_y.has_value();
    PointerPair fallback;
    const PointerPair* pair = tl.pointer ? &*tl.pointer : nullptr;
    if (pm && pair == nullptr) {
        fallback = never_fired_pair(marker);
        pair = &fallback;
    }
    const CondEval e = eval_branches(branches, pair, s.q, t, pm);
    VelocityEval out;
    out.abs_psi = std::abs(e.psi);
    out.scale = e.scale;
    if (out.abs_psi == 0.0 || branches.empty()) return out;
    const double m = branches[0]->packet.mass;
    out.v = Vec2{(e.ddx / e.psi).imag() / m, (e.ddy / e.psi).imag() / m};
    if (pm) out.v_pointer = (e.dp / e.psi).imag() / pair->rest.mass;
    return out;
}

double quantum_potential(const BranchTimeline& tl, const MarkerModel& marker,
                         const ParticleState& s, double t) {
    const auto branches = guiding_branches(tl, s, t);
    const bool pm =
        marker.kind == MarkerKind::pointer && s.q.pointer_y.has_value();
    PointerPair fallback;
    const PointerPair* pair = tl.pointer ? &*tl.pointer : nullptr;
    if (pm && pair == nullptr) {
        fallback = never_fired_pair(marker);
        pair = &fallback;
    }
    const CondEval e = eval_branches(branches, pair, s.q, t, pm);
    if (std::abs(e.psi) == 0.0 || branches.empty())
        throw std::domain_error("quantum potential evaluated at a node");
    const double m = branches[0]->packet.mass;
    const Cplx gx = e.ddx / e.psi;
    const Cplx gy = e.ddy / e.psi;
    // lap R / R = Re(lap psi / psi) + |Im(grad psi / psi)|^2
    double q = -((e.lap / e.psi).real() + gx.imag() * gx.imag() +
                 gy.imag() * gy.imag()) /
               (2.0 * m);
    if (pm) {
        const Cplx gp = e.dp / e.psi;
        q += -((e.dpp / e.psi).real() + gp.imag() * gp.imag()) /
             (2.0 * pair->rest.mass);
    }
    return q;
}

Configuration sample_configuration(const Layout& layout,
                                   const MarkerModel& marker,
                                   RandomStream& rng) {
    Configuration q;
    const double sx = layout.source.sigma0 / std::sqrt(2.0);
    q.r = layout.source.center0 + Vec2{sx * rng.normal(), sx * rng.normal()};
    if (marker.kind == MarkerKind::pointer)
        q.pointer_y = marker.pointer_sigma / std::sqrt(2.0) * rng.normal();
    return q;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kE[7] = {35.0 / 384 - 5179.0 / 57600,
                          0.0,
                          500.0 / 1113 - 7571.0 / 16695,
                          125.0 / 192 - 393.0 / 640,
                          -2187.0 / 6784 + 92097.0 / 339200,
                          11.0 / 84 - 187.0 / 2100,
                          -1.0 / 40};

struct DetectorDisk {
    Vec2 pos;
    std::string label;
};

struct Driver {
    const Layout& layout;
    const BranchTimeline& tl;
    const MarkerModel& marker;
    const IntegratorParams& par;
    const std::vector<double>& checkpoint_times;
    bool keep_samples;
    bool pointer_mode;
    PointerPair fallback;
    const PointerPair* pair;
    std::vector<DetectorDisk> disks;

    TrajectoryRecord rec;
    ParticleState s;
    int dim = 2;
    double next_sample = 0.0;
    bool terminated = false;

    std::vector<const Branch*> seg_branches;

    Driver(const Layout& l, const BranchTimeline& t, const MarkerModel& m,
           const IntegratorParams& p, const std::vector<double>& cps, bool ks)
        : layout(l), tl(t), marker(m), par(p), checkpoint_times(cps),
          keep_samples(ks) {
        pointer_mode = marker.kind == MarkerKind::pointer;
        pair = tl.pointer ? &*tl.pointer : nullptr;
        if (pointer_mode && pair == nullptr) {
            fallback = never_fired_pair(marker);
            pair = &fallback;
        }
        for (const auto& e : layout.elements)
            if (e.kind == ElementKind::detector)
                disks.push_back({e.position, e.label});
        dim = pointer_mode ? 3 : 2;
    }

    Configuration to_config(const double* y) const {
        Configuration q;
        q.r = {y[0], y[1]};
        if (pointer_mode) q.pointer_y = y[2];
        return q;
    }

    void record_checkpoint(double t, const Configuration& q) {
        for (std::size_t i = 0; i < checkpoint_times.size(); ++i)
            if (std::abs(checkpoint_times[i] - t) <= kEventTol)
                rec.checkpoints[i] = q;
    }

    void track_u(const Vec2& r) {
        const Vec2 d = r - layout.overlap_center;
        if (d.norm() <= layout.overlap_radius) {
            const double u = d.dot(layout.overlap_axis);
            rec.min_u = std::min(rec.min_u, u);
            rec.max_u = std::max(rec.max_u, u);
        }
    }

    void push_sample(double t, const Configuration& q) {
        if (keep_samples) rec.samples.push_back({t, q});
    }

    /// Velocity at one configuration over the current segment branch set.
    /// Returns false when the field vanishes identically.
    bool rhs(double t, const double* y, double* dy, double& abs_psi,
             double& scale) {
        const Configuration q = to_config(y);
        const CondEval e = eval_branches(seg_branches, pair, q, t, pointer_mode);
        abs_psi = std::abs(e.psi);
        scale = e.scale;
        if (abs_psi == 0.0) {
            for (int i = 0; i < dim; ++i) dy[i] = 0.0;
            return false;
        }
        const double m = seg_branches[0]->packet.mass;
        dy[0] = (e.ddx / e.psi).imag() / m;
        dy[1] = (e.ddy / e.psi).imag() / m;
        if (pointer_mode) dy[2] = (e.dp / e.psi).imag() / pair->rest.mass;
        return true;
    }

    void flag_node(double t, const double* y) {
        rec.flag = TrajectoryFlag::node_proximity;
        rec.q_final = to_config(y);
        rec.t_hit = t;
        terminated = true;
    }

    static void hermite(const double* y0, const double* f0, const double* y1,
                        const double* f1, double h, double theta, int dim,
                        double* out) {
        const double t2 = theta * theta;
        const double t3 = t2 * theta;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + theta;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        for (int i = 0; i < dim; ++i)
            out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] +
                     h11 * h * f1[i];
    }

    /// Earliest disk entry within an accepted step, by bisection over the
    /// interpolant. Terminates the trajectory when a detector is hit.
    bool check_absorption(double t, const double* y0, const double* f0,
                          const double* y1, const double* f1, double h) {
        for (const auto& disk : disks) {
            const Vec2 p0{y0[0], y0[1]};
            const Vec2 p1{y1[0], y1[1]};
            const Vec2 w = p1 - p0;
            const double wn2 = w.norm2();
            double tc = 0.0;
            if (wn2 > 0.0)
                tc = std::clamp((disk.pos - p0).dot(w) / wn2, 0.0, 1.0);
            const Vec2 closest = p0 + tc * w;
            const double r = layout.detector_radius;
            if ((closest - disk.pos).norm() > r + 0.05 &&
                (p1 - disk.pos).norm() > r)
                continue;

            auto dist_at = [&](double theta) {
                double q[3];
                hermite(y0, f0, y1, f1, h, theta, dim, q);
                return (Vec2{q[0], q[1]} - disk.pos).norm() - r;
            };
            double hi = -1.0;
            for (double theta : {tc, 1.0}) {
                if (theta > 0.0 && dist_at(theta) <= 0.0) {
                    hi = theta;
                    break;
                }
            }
            if (hi < 0.0) continue;
            double lo = 0.0;
            for (int i = 0; i < 80; ++i) {
                const double mid = 0.5 * (lo + hi);
                if (dist_at(mid) <= 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            double q[3];
            hermite(y0, f0, y1, f1, h, hi, dim, q);
            rec.detector = disk.label;
            rec.t_hit = t + hi * h;
            rec.r_hit = {q[0], q[1]};
            rec.q_final = to_config(q);
            push_sample(rec.t_hit, rec.q_final);
            terminated = true;
            return true;
        }
        return false;
    }

    void integrate_segment(double ta, double tb, double* y) {
        // Branch lifetimes only switch at segment boundaries, but coincident
        // boundaries (equal arm transits) can disagree by rounding noise, so
        // the set is sampled at the segment midpoint where it is unambiguous.
        seg_branches = guiding_branches(tl, s, 0.5 * (ta + tb));
        if (seg_branches.empty())
            throw std::logic_error("no guiding branches on a segment");

        double k[7][3];
        double abs_psi = 0.0;
        double scale = 0.0;
        if (!rhs(ta, y, k[0], abs_psi, scale)) {
            flag_node(ta, y);
            return;
        }
        rec.min_psi_rel = std::min(rec.min_psi_rel, abs_psi / scale);
        if (abs_psi < par.node_floor_rel * scale) {
            flag_node(ta, y);
            return;
        }

        double t = ta;
        double h = std::min({par.h_init, par.h_max, tb - ta});
        int consec_rej = 0;

        while (t < tb - 1e-14 && !terminated) {
            h = std::min(h, tb - t);
            double ytmp[3];
            double y1[3];
            bool stage_ok = true;
            for (int st = 1; st < 6; ++st) {
                for (int i = 0; i < dim; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < st; ++j) acc += kA[st][j] * k[j][i];
                    ytmp[i] = y[i] + h * acc;
                }
                double ap, sc;
                stage_ok =
                    rhs(t + kC[st] * h, ytmp, k[st], ap, sc) && stage_ok;
            }
            for (int i = 0; i < dim; ++i) {
                double acc = 0.0;
                for (int j = 0; j < 6; ++j) acc += kA[6][j] * k[j][i];
                y1[i] = y[i] + h * acc;
            }
            double ap1, sc1;
            stage_ok = rhs(t + h, y1, k[6], ap1, sc1) && stage_ok;

            double err = 0.0;
            for (int i = 0; i < dim; ++i) {
                double ei = 0.0;
                for (int j = 0; j < 7; ++j) ei += kE[j] * k[j][i];
                ei *= h;
                const double sc =
                    par.atol +
                    par.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
                err += (ei / sc) * (ei / sc);
            }
            err = std::sqrt(err / dim);
            if (!stage_ok) err = 2.0; // force rejection onto smaller steps

            if (err <= 1.0) {
                while (next_sample <= t + h + 1e-14) {
                    const double theta = (next_sample - t) / h;
                    if (theta >= -1e-12 && theta <= 1.0 + 1e-12) {
                        double q[3];
                        hermite(y, k[0], y1, k[6], h, std::clamp(theta, 0.0, 1.0),
                                dim, q);
                        const Configuration c = to_config(q);
                        track_u(c.r);
                        push_sample(next_sample, c);
                    }
                    next_sample += par.sample_dt;
                }
                if (check_absorption(t, y, k[0], y1, k[6], h)) return;

                t += h;
                for (int i = 0; i < dim; ++i) {
                    y[i] = y1[i];
                    k[0][i] = k[6][i];
                }
                track_u({y[0], y[1]});
                rec.min_psi_rel = std::min(rec.min_psi_rel, ap1 / sc1);
                if (ap1 < par.node_floor_rel * sc1) {
                    flag_node(t, y);
                    return;
                }
                consec_rej = 0;
                const double fac =
                    std::clamp(0.9 * std::pow(err > 0 ? err : 1e-10, -0.2),
                               1.0, 5.0);
                h = std::min(h * fac, par.h_max);
            } else {
                ++consec_rej;
                if (consec_rej > par.max_rejections) {
                    flag_node(t, y);
                    return;
                }
                h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
                if (h < par.h_min) {
                    flag_node(t, y);
                    return;
                }
            }
        }
    }

    void apply_events(double t, double* y, RandomStream& rng) {
        if (s.bound_branch >= 0 && t >= s.bound_until - kEventTol)
            s.bound_branch = -1;

        if (tl.marker_event && std::abs(t - tl.marker_event->t) <= kEventTol) {
            const int split_id = tl.marker_event->branch_split;
            if (marker.kind == MarkerKind::discrete) {
                s.beable.discrete = draw_discrete_beable(marker, s.channel, rng);
                if (s.bound_branch == split_id) {
                    for (const auto& b : tl.branches)
                        if (b.parent == split_id &&
                            b.label == *s.beable.discrete) {
                            s.bound_branch = b.id;
                            break;
                        }
                }
            } else if (marker.kind == MarkerKind::pointer) {
                if (s.bound_branch == split_id) {
                    for (const auto& b : tl.branches)
                        if (b.parent == split_id) {
                            s.bound_branch = b.id;
                            break;
                        }
                }
            }
        }

        const SplitEvent* ev = tl.split_at(t);
        if (ev == nullptr) return;
        const auto pre = guiding_branches(tl, s, t - 1e-10);
        bool applies = false;
        for (const Branch* b : pre)
            for (int p : ev->parents)
                if (b->id == p) applies = true;
        if (!applies) return;

        const Vec2 r{y[0], y[1]};
        const double u_in = (r - ev->origin).dot(ev->e_u);
        const double quant = ev->input_quantile(u_in);
        const SplitBand& band = ev->band_of(quant);
        const double u_out = ev->output_u(quant);
        y[0] += (u_out - u_in) * ev->e_u.x;
        y[1] += (u_out - u_in) * ev->e_u.y;
        s.q.r = {y[0], y[1]};
        const Branch& d = tl.branches[static_cast<std::size_t>(band.daughter)];
        if (d.channel > 0) s.channel = d.channel;
        if (ev->release_time > t + kEventTol) {
            s.bound_branch = d.id;
            s.bound_until = ev->release_time;
        } else {
            s.bound_branch = -1;
        }
    }

    TrajectoryRecord run(const Configuration& q0, int id, RandomStream& rng) {
        rec.id = id;
        rec.q0 = q0;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rec.checkpoints.assign(checkpoint_times.size(),
                               Configuration{{nan, nan}, std::nullopt});
        s.q = q0;

        std::vector<double> bounds;
        bounds.push_back(tl.source_birth);
        for (double t : tl.event_times())
            if (t < tl.t_end) bounds.push_back(t);
        for (double t : checkpoint_times)
            if (t >= tl.source_birth && t <= tl.t_end) bounds.push_back(t);
        bounds.push_back(tl.t_end);
        std::sort(bounds.begin(), bounds.end());
        bounds.erase(std::unique(bounds.begin(), bounds.end(),
                                 [](double a, double b) {
                                     return std::abs(a - b) <= kEventTol;
                                 }),
                     bounds.end());

        double y[3] = {q0.r.x, q0.r.y,
                       q0.pointer_y.has_value() ? *q0.pointer_y : 0.0};
        next_sample = tl.source_birth;
        const Configuration c0 = to_config(y);
        record_checkpoint(tl.source_birth, c0);
        track_u(c0.r);
        push_sample(tl.source_birth, c0);
        next_sample += par.sample_dt;

        for (std::size_t bi = 0; bi + 1 < bounds.size() && !terminated; ++bi) {
            apply_events(bounds[bi], y, rng);
            if (std::abs(bounds[bi] - tl.source_birth) <= kEventTol)
                record_checkpoint(bounds[bi], to_config(y));
            integrate_segment(bounds[bi], bounds[bi + 1], y);
            if (!terminated) {
                s.q = to_config(y);
                record_checkpoint(bounds[bi + 1], s.q);
            }
        }

        if (!terminated) {
            s.q = to_config(y);
            rec.q_final = s.q;
            rec.t_hit = tl.t_end;
        }
        rec.beable = s.beable;
        if (pointer_mode) rec.beable.pointer_y = rec.q_final.pointer_y;
        rec.channel = s.channel;
        return std::move(rec);
    }
};

} // namespace

TrajectoryRecord integrate(const Layout& layout, const BranchTimeline& tl,
                           const MarkerModel& marker, const Configuration& q0,
                           int id, RandomStream& rng,
                           const IntegratorParams& par,
                           const std::vector<double>& checkpoint_times,
                           bool keep_samples) {
    Driver d(layout, tl, marker, par, checkpoint_times, keep_samples);
    return d.run(q0, id, rng);
}

} // namespace pilotmz
