#include "pilotmz/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>

#include "pilotmz/pilotwave.hpp"

namespace pilotmz {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;

using SectorMap = std::map<MarkerLabel, std::vector<const Branch*>>;

SectorMap group_by_sector(const std::vector<const Branch*>& branches) {
    SectorMap sectors;
    for (const Branch* b : branches) sectors[b->label].push_back(b);
    return sectors;
}

/// Sector-summed position density at one point: orthogonal marker sectors
/// add incoherently, branches within a sector add coherently.
double position_density(const SectorMap& sectors, const Vec2& r, double t) {
    double total = 0.0;
    for (const auto& [label, group] : sectors) {
        Cplx amp = 0.0;
        for (const Branch* b : group)
            amp += b->coefficient * b->packet.evaluate(r, t);
        total += std::norm(amp);
    }
    return total;
}

struct Axis1D {
    std::vector<double> x;
    std::vector<double> w; // Simpson weights including the step factor
};

Axis1D simpson_axis(double lo, double hi, double max_step) {
    Axis1D ax;
    const int half = std::max(1, static_cast<int>(std::ceil((hi - lo) / (2.0 * max_step))));
    const int n = 2 * half + 1;
    const double h = (hi - lo) / (n - 1);
    ax.x.resize(static_cast<std::size_t>(n));
    ax.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ax.x[static_cast<std::size_t>(i)] = lo + h * i;
        double c = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        ax.w[static_cast<std::size_t>(i)] = c * h / 3.0;
    }
    return ax;
}

const Element& find_detector(const Layout& layout, const std::string& label) {
    for (const auto& e : layout.elements)
        if (e.kind == ElementKind::detector && e.label == label) return e;
    throw std::invalid_argument("unknown detector label: " + label);
}

struct BranchBox {
    Vec2 lo;
    Vec2 hi;
    double sigma = 0.0;
};

BranchBox margin_box(const std::vector<const Branch*>& branches, double t,
                     double pad_sigmas) {
    if (branches.empty()) throw std::logic_error("no live branches at this time");
    BranchBox box;
    box.lo = {1e300, 1e300};
    box.hi = {-1e300, -1e300};
    for (const Branch* b : branches) {
        const Vec2 c = b->packet.center(t);
        box.sigma = std::max(box.sigma, b->packet.sigma(t));
        box.lo.x = std::min(box.lo.x, c.x);
        box.lo.y = std::min(box.lo.y, c.y);
        box.hi.x = std::max(box.hi.x, c.x);
        box.hi.y = std::max(box.hi.y, c.y);
    }
    const double pad = pad_sigmas * box.sigma;
    box.lo = box.lo - Vec2{pad, pad};
    box.hi = box.hi + Vec2{pad, pad};
    return box;
}

double fourth_order_d1(double f2m, double f1m, double f1p, double f2p, double h) {
    return (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
}

Cplx fourth_order_d1(Cplx f2m, Cplx f1m, Cplx f1p, Cplx f2p, double h) {
    return (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
}

double fourth_order_d2(double f2m, double f1m, double f0, double f1p, double f2p,
                       double h) {
    return (-f2p + 16.0 * f1p - 30.0 * f0 + 16.0 * f1m - f2m) / (12.0 * h * h);
}

Cplx fourth_order_d2(Cplx f2m, Cplx f1m, Cplx f0, Cplx f1p, Cplx f2p, double h) {
    return (-f2p + 16.0 * f1p - 30.0 * f0 + 16.0 * f1m - f2m) / (12.0 * h * h);
}

} // namespace

double algebra_probability(const BranchTimeline& tl, const std::string& detector) {
    SectorMap sectors;
    for (const auto& b : tl.branches) {
        if (b.terminal_detector != detector) continue;
        if (b.t1 < 1e300) continue;
        sectors[b.label].push_back(&b);
    }
    double total = 0.0;
    for (const auto& [label, group] : sectors) {
        Cplx amp = 0.0;
        for (const Branch* b : group) amp += b->coefficient;
        total += std::norm(amp);
    }
    return total;
}

double quadrature_probability(const Layout& layout, const BranchTimeline& tl,
                              const std::string& detector, double t,
                              int pts_per_sigma) {
    const Element& det = find_detector(layout, detector);
    const double u_det = (det.position - layout.overlap_center).dot(layout.overlap_axis);
    const double side = u_det > 0.0 ? 1.0 : -1.0;

    const std::vector<const Branch*> live = tl.alive(t);
    const SectorMap sectors = group_by_sector(live);
    const BranchBox box = margin_box(live, t, 8.0);
    const double step = box.sigma / pts_per_sigma;
    const Axis1D ax = simpson_axis(box.lo.x, box.hi.x, step);
    const Axis1D ay = simpson_axis(box.lo.y, box.hi.y, step);

    double total = 0.0;
    for (std::size_t i = 0; i < ax.x.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < ay.x.size(); ++j) {
            const Vec2 r{ax.x[i], ay.x[j]};
            const double u = (r - layout.overlap_center).dot(layout.overlap_axis);
            if (u * side <= 0.0) continue;
            row += ay.w[j] * position_density(sectors, r, t);
        }
        total += ax.w[i] * row;
    }
    return total;
}

BornCheck born_probability_check(const Layout& layout, const BranchTimeline& tl,
                                 const std::string& detector, double t,
                                 int pts_per_sigma) {
    BornCheck out;
    out.algebra = algebra_probability(tl, detector);
    out.quadrature = quadrature_probability(layout, tl, detector, t, pts_per_sigma);
    if (std::abs(out.algebra - out.quadrature) > 1e-4)
        throw std::runtime_error("Born probability routes disagree for " + detector);
    return out;
}

double born_probability(const Scenario& scen, const std::string& detector) {
    const BranchTimeline tl = build_timeline(scen.layout, scen.marker);
    const double t_q = 30.0 / scen.spec.speed;
    return born_probability_check(scen.layout, tl, detector, t_q).algebra;
}

double quadrature_convergence(const Scenario& scen, const std::string& detector) {
    const BranchTimeline tl = build_timeline(scen.layout, scen.marker);
    const double t_q = 30.0 / scen.spec.speed;
    const double coarse = quadrature_probability(scen.layout, tl, detector, t_q, 16);
    const double fine = quadrature_probability(scen.layout, tl, detector, t_q, 32);
    return std::abs(fine - coarse);
}

FdErrors fd_check(const Layout& layout, const BranchTimeline& tl,
                  const MarkerModel& marker, double t, int n_points,
                  std::uint64_t seed) {
    RandomStream rng(seed, 0);
    const double mass = layout.source.mass;

    ParticleState s;
    if (marker.kind == MarkerKind::discrete)
        s.beable.discrete = MarkerLabel::up;
    else if (marker.kind == MarkerKind::pointer)
        s.q.pointer_y = 0.0;

    auto eval_at = [&](const Vec2& r, double pointer_shift) {
        ParticleState probe = s;
        probe.q.r = r;
        if (probe.q.pointer_y) *probe.q.pointer_y += pointer_shift;
        return conditional_eval(tl, marker, probe, t);
    };

    FdErrors worst;
    const double h1 = 1e-4;
    const double h2 = 1e-3;
    for (int i = 0; i < n_points; ++i) {
        Vec2 r;
        CondEval ev;
        int guard = 0;
        do {
            const double rad = layout.overlap_radius * std::sqrt(rng.uniform01());
            const double ang = 2.0 * kPi * rng.uniform01();
            r = layout.overlap_center + Vec2{rad * std::cos(ang), rad * std::sin(ang)};
            ev = eval_at(r, 0.0);
            if (++guard > 1000)
                throw std::runtime_error("could not find a non-node sample point");
            // Relative accuracy of the second-derivative stencils degrades as
            // 1/|psi| toward a fringe zero, and |psi| has a corner at each zero
            // crossing that the modulus stencil must not straddle. The margin
            // keeps every sample more than one stencil width away from a node.
        } while (std::abs(ev.psi) < 1.5e-1 * ev.scale);

        const Cplx xp1 = eval_at(r + Vec2{h1, 0}, 0).psi;
        const Cplx xm1 = eval_at(r - Vec2{h1, 0}, 0).psi;
        const Cplx xp2 = eval_at(r + Vec2{2 * h1, 0}, 0).psi;
        const Cplx xm2 = eval_at(r - Vec2{2 * h1, 0}, 0).psi;
        const Cplx yp1 = eval_at(r + Vec2{0, h1}, 0).psi;
        const Cplx ym1 = eval_at(r - Vec2{0, h1}, 0).psi;
        const Cplx yp2 = eval_at(r + Vec2{0, 2 * h1}, 0).psi;
        const Cplx ym2 = eval_at(r - Vec2{0, 2 * h1}, 0).psi;

        const Cplx gx_fd = fourth_order_d1(xm2, xm1, xp1, xp2, h1);
        const Cplx gy_fd = fourth_order_d1(ym2, ym1, yp1, yp2, h1);
        const double grad_norm = std::sqrt(std::norm(ev.ddx) + std::norm(ev.ddy));
        const double grad_err =
            std::sqrt(std::norm(gx_fd - ev.ddx) + std::norm(gy_fd - ev.ddy)) /
            grad_norm;
        worst.gradient = std::max(worst.gradient, grad_err);

        const CondEval kx1 = eval_at(r + Vec2{h2, 0}, 0);
        const CondEval kx1m = eval_at(r - Vec2{h2, 0}, 0);
        const CondEval kx2 = eval_at(r + Vec2{2 * h2, 0}, 0);
        const CondEval kx2m = eval_at(r - Vec2{2 * h2, 0}, 0);
        const CondEval ky1 = eval_at(r + Vec2{0, h2}, 0);
        const CondEval ky1m = eval_at(r - Vec2{0, h2}, 0);
        const CondEval ky2 = eval_at(r + Vec2{0, 2 * h2}, 0);
        const CondEval ky2m = eval_at(r - Vec2{0, 2 * h2}, 0);

        const Cplx lap_fd =
            fourth_order_d2(kx2m.psi, kx1m.psi, ev.psi, kx1.psi, kx2.psi, h2) +
            fourth_order_d2(ky2m.psi, ky1m.psi, ev.psi, ky1.psi, ky2.psi, h2);
        worst.laplacian = std::max(
            worst.laplacian, std::abs(lap_fd - ev.lap) / std::abs(ev.lap));

        ParticleState sp = s;
        sp.q.r = r;
        const VelocityEval vel = velocity(tl, marker, sp, t);
        const double a0 = std::arg(ev.psi);
        auto rel_phase = [&](const Cplx& psi) {
            return std::remainder(std::arg(psi) - a0, 2.0 * kPi);
        };
        const Vec2 v_fd{
            fourth_order_d1(rel_phase(xm2), rel_phase(xm1), rel_phase(xp1),
                            rel_phase(xp2), h1) /
                mass,
            fourth_order_d1(rel_phase(ym2), rel_phase(ym1), rel_phase(yp1),
                            rel_phase(yp2), h1) /
                mass};
        worst.velocity =
            std::max(worst.velocity, (v_fd - vel.v).norm() / vel.v.norm());

        const double q_ana = quantum_potential(tl, marker, sp, t);
        const double r0 = std::abs(ev.psi);
        double lap_mod =
            fourth_order_d2(std::abs(kx2m.psi), std::abs(kx1m.psi), r0,
                            std::abs(kx1.psi), std::abs(kx2.psi), h2) +
            fourth_order_d2(std::abs(ky2m.psi), std::abs(ky1m.psi), r0,
                            std::abs(ky1.psi), std::abs(ky2.psi), h2);
        double q_fd = -0.5 * lap_mod / (mass * r0);
        if (s.q.pointer_y) {
            const double pp2m = std::abs(eval_at(r, -2 * h2).psi);
            const double pp1m = std::abs(eval_at(r, -h2).psi);
            const double pp1 = std::abs(eval_at(r, h2).psi);
            const double pp2 = std::abs(eval_at(r, 2 * h2).psi);
            q_fd += -0.5 * fourth_order_d2(pp2m, pp1m, r0, pp1, pp2, h2) /
                    (marker.pointer_mass * r0);
        }
        const double q_scale =
            std::max(std::abs(q_ana),
                     1.0 / (mass * layout.source.sigma0 * layout.source.sigma0));
        worst.qpot = std::max(worst.qpot, std::abs(q_fd - q_ana) / q_scale);
    }
    return worst;
}

std::vector<EquivAxis> standard_equivariance_axes() {
    const double inv_sqrt2 = 0.70710678118654752440;
    return {
        {0.0, {0.0, -4.0}, {1.0, 0.0}},
        {0.12, {4.0, 4.0}, {inv_sqrt2, inv_sqrt2}},
        {0.24, {10.0, 10.0}, {-inv_sqrt2, inv_sqrt2}},
    };
}

EquivResult equivariance_test(const BranchTimeline& tl,
                              const std::vector<TrajectoryRecord>& records,
                              std::size_t checkpoint_index, double t_check,
                              const Vec2& origin, const Vec2& axis, int bins) {
    if (bins != 20)
        throw std::invalid_argument("equivariance threshold is fixed at 20 bins");
    const Vec2 a = axis / axis.norm();
    const Vec2 ap{-a.y, a.x};

    const std::vector<const Branch*> live = tl.alive(t_check);
    const SectorMap sectors = group_by_sector(live);
    double sigma = 0.0;
    double s_lo = 1e300, s_hi = -1e300, w_lo = 1e300, w_hi = -1e300;
    for (const Branch* b : live) {
        const Vec2 d = b->packet.center(t_check) - origin;
        sigma = std::max(sigma, b->packet.sigma(t_check));
        s_lo = std::min(s_lo, d.dot(a));
        s_hi = std::max(s_hi, d.dot(a));
        w_lo = std::min(w_lo, d.dot(ap));
        w_hi = std::max(w_hi, d.dot(ap));
    }
    s_lo -= 8.0 * sigma;
    s_hi += 8.0 * sigma;
    const Axis1D aw = simpson_axis(w_lo - 8.0 * sigma, w_hi + 8.0 * sigma,
                                   sigma / 16.0);

    // Fine transverse marginal, then equal-probability bin edges from its CDF.
    const int ns = 8193;
    const double hs = (s_hi - s_lo) / (ns - 1);
    std::vector<double> density(ns, 0.0);
    for (int i = 0; i < ns; ++i) {
        const double sv = s_lo + hs * i;
        double acc = 0.0;
        for (std::size_t j = 0; j < aw.x.size(); ++j)
            acc += aw.w[j] *
                   position_density(sectors, origin + a * sv + ap * aw.x[j],
                                    t_check);
        density[static_cast<std::size_t>(i)] = acc;
    }
    std::vector<double> cdf(ns, 0.0);
    for (int i = 1; i < ns; ++i)
        cdf[static_cast<std::size_t>(i)] =
            cdf[static_cast<std::size_t>(i - 1)] +
            0.5 * hs *
                (density[static_cast<std::size_t>(i - 1)] +
                 density[static_cast<std::size_t>(i)]);
    const double total = cdf.back();

    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    edges.front() = s_lo;
    edges.back() = s_hi;
    for (int k = 1; k < bins; ++k) {
        const double target = total * k / bins;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
        std::size_t j = static_cast<std::size_t>(it - cdf.begin());
        if (j == 0) j = 1;
        const double c0 = cdf[j - 1], c1 = cdf[j];
        const double frac = c1 > c0 ? (target - c0) / (c1 - c0) : 0.0;
        edges[static_cast<std::size_t>(k)] = s_lo + hs * (j - 1 + frac);
    }

    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    int used = 0;
    for (const auto& rec : records) {
        if (rec.flag != TrajectoryFlag::clean) continue;
        if (checkpoint_index >= rec.checkpoints.size()) continue;
        const double sv = (rec.checkpoints[checkpoint_index].r - origin).dot(a);
        auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, sv);
        std::size_t bin = static_cast<std::size_t>(it - (edges.begin() + 1));
        ++counts[bin];
        ++used;
    }

    EquivResult out;
    out.bins = bins;
    if (used == 0) return out;
    const double expected = static_cast<double>(used) / bins;
    for (int k = 0; k < bins; ++k) {
        const double d = counts[static_cast<std::size_t>(k)] - expected;
        out.chi2 += d * d / expected;
    }
    out.pass = out.chi2 <= kChi2Dof19At99;
    return out;
}

double min_pairwise_separation(const std::vector<TrajectoryRecord>& records) {
    double best2 = 1e300;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = i + 1; j < records.size(); ++j) {
            if (records[i].beable.discrete != records[j].beable.discrete) continue;
            const auto& sa = records[i].samples;
            const auto& sb = records[j].samples;
            const std::size_t m = std::min(sa.size(), sb.size());
            for (std::size_t k = 0; k < m; ++k) {
                if (std::abs(sa[k].t - sb[k].t) > 1e-12) break;
                double d2 = (sa[k].q.r - sb[k].q.r).norm2();
                if (sa[k].q.pointer_y && sb[k].q.pointer_y) {
                    const double dp = *sa[k].q.pointer_y - *sb[k].q.pointer_y;
                    d2 += dp * dp;
                }
                best2 = std::min(best2, d2);
            }
        }
    }
    return std::sqrt(best2);
}

PhaseProbe check_phase_convention(Cplx reflection_phase) {
    ScenarioSpec spec;
    spec.name = ScenarioName::wheeler_closed;
    spec.n = 1;
    Scenario scen = build_scenario(spec);
    scen.layout.reflection_phase = reflection_phase;
    const BranchTimeline tl = build_timeline(scen.layout, scen.marker);

    PhaseProbe probe;
    for (const Branch* b : tl.alive(0.20)) {
        if (b->channel == 1) probe.arm1 = b->coefficient;
        if (b->channel == 2) probe.arm2 = b->coefficient;
    }
    for (const Branch* b : tl.alive(0.30))
        if (b->terminal_detector == "D1") probe.d1_merged = b->coefficient;

    probe.dark_port_elided = true;
    for (const auto& b : tl.branches)
        if (b.terminal_detector == "D2") probe.dark_port_elided = false;

    const Element* bs2 = nullptr;
    for (const auto& e : scen.layout.elements)
        if (e.label == "BS2") bs2 = &e;
    if (bs2 == nullptr) throw std::logic_error("closed preset lacks BS2");
    // Dark-port contributions as the splitter would emit them before the
    // cancellation elides the group: arm1 reflects toward D2, arm2 transmits.
    probe.d2_from_arm1 = probe.arm1 * bs2->rho * reflection_phase;
    probe.d2_from_arm2 = probe.arm2 * bs2->tau;

    const double inv_sqrt2 = 0.70710678118654752440;
    const double tol = 1e-12;
    probe.pass = probe.dark_port_elided &&
                 std::abs(probe.arm2 - Cplx(0.0, inv_sqrt2)) < tol &&
                 std::abs(probe.d2_from_arm1 - Cplx(0.0, -0.5)) < tol &&
                 std::abs(probe.d2_from_arm2 - Cplx(0.0, 0.5)) < tol &&
                 std::abs(probe.d1_merged - Cplx(-1.0, 0.0)) < tol &&
                 std::abs(algebra_probability(tl, "D1") - 1.0) < 1e-12;
    return probe;
}

bool tolerance_robustness(int n, std::uint64_t seed) {
    ScenarioSpec spec;
    spec.name = ScenarioName::wheeler_open;
    spec.n = n;
    spec.seed = seed;
    ScenarioSpec loose = spec;
    loose.rtol = 1e-6;
    loose.atol = 1e-8;

    const RunReport tight = run_scenario(build_scenario(spec));
    const RunReport relaxed = run_scenario(build_scenario(loose));
    for (std::size_t i = 0; i < tight.records.size(); ++i) {
        if (tight.records[i].flag != TrajectoryFlag::clean) continue;
        if (relaxed.records[i].flag != TrajectoryFlag::clean) continue;
        if (tight.ports[i] != relaxed.ports[i]) return false;
        if (tight.straight[i] || relaxed.straight[i]) return false;
    }
    return tight.flag_budget_ok() && relaxed.flag_budget_ok();
}

} // namespace pilotmz
