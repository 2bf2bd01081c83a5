#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pilotmz/marker.hpp"
#include "pilotmz/stats.hpp"
#include "pilotmz/vec.hpp"
#include "pilotmz/wavepacket.hpp"

namespace pilotmz {

enum class ElementKind { beam_splitter, mirror, detector };

/// One optical element. Reflections take v -> v - 2(v.n)n. Splitters carry
/// real amplitudes rho (reflect) and tau (transmit); an element is transparent
/// outside its activity interval.
struct Element {
    ElementKind kind = ElementKind::mirror;
    Vec2 position;
    Vec2 normal{-0.7071067811865475244, 0.7071067811865475244};
    double rho = 0.7071067811865475244;
    double tau = 0.7071067811865475244;
    double active_from = -1e300;
    double active_to = 1e300;
    std::string label;

    bool scheduled() const {
        return active_from > -1e299 || active_to < 1e299;
    }
    bool active_at(double t) const {
        return t >= active_from && t < active_to;
    }
};

enum class EventKind {
    reflected,
    transmitted,
    marked_keep,
    marked_flip,
    pointer_kick,
    merged
};

struct BranchEvent {
    int element = -1; // index into Layout::elements, -1 for marker events
    EventKind kind;
    Cplx factor;
    double t;
};

/// One term of the superposition: a packet leg with its cumulative complex
/// coefficient and marker label. Alive on [t0, t1); a leg that reaches a
/// detector keeps evaluating (the detector absorbs particles, not the field).
struct Branch {
    int id = -1;
    int parent = -1;
    GaussianPacket2D packet;
    Cplx coefficient{1.0, 0.0};
    MarkerLabel label = MarkerLabel::neutral;
    int channel = 0; // 0 before the first splitter, then 1 (reflected) or 2
    double t0 = 0.0;
    double t1 = 1e300;
    std::vector<BranchEvent> history;
    std::string terminal_detector;

    bool alive_at(double t) const { return t >= t0 && t < t1; }
};

/// Quantile band of a splitter transit: input quantiles [q0, q1) feed the
/// given daughter branch.
struct SplitBand {
    double q0;
    double q1;
    int daughter;
};

/// Measure-preserving particle transit of an active beam splitter. Particle
/// coordinates along e_u are remapped by matching the input-side CDF to the
/// per-daughter output Gaussians; the orthogonal coordinate is untouched.
/// Until release_time a particle stays guided by its own daughter alone
/// (daughters still overlap spatially; the full superposition takes over once
/// their centers are 10 amplitude widths apart).
struct SplitEvent {
    double t;
    int element;
    Vec2 origin;
    Vec2 e_u;          // unit axis, +u = transmitted side of a single input
    double sigma_amp;  // shared daughter amplitude width at t
    std::vector<int> parents;
    std::vector<SplitBand> bands; // ordered by q0, covering (0,1)
    double release_time;
    bool analytic_input = true;    // single-Gaussian input centered at origin
    stats::TabulatedCdf input_cdf; // used when !analytic_input

    double input_quantile(double u) const;
    /// Remapped u for input quantile q per the band map; returns the band.
    const SplitBand& band_of(double q) const;
    double output_u(double q) const;
};

struct Layout {
    std::vector<Element> elements;
    GaussianPacket2D source;
    Vec2 overlap_center;
    double overlap_radius = 4.0;
    /// Collision axis at the recombination point; u = (r - center) . axis.
    Vec2 overlap_axis{-0.7071067811865475244, 0.7071067811865475244};
    double detector_radius = 2.0;
    Cplx reflection_phase{0.0, 1.0};
    double t_end = 0.45;
};

struct MarkerEventInfo {
    double t;
    int branch_split; // branch that was split/relabeled
};

/// The fully unrolled branch structure of one layout + marker model: every
/// leg every branch will ever occupy, all split events, and the pointer pair
/// when the marker model ejects one.
struct BranchTimeline {
    std::vector<Branch> branches;
    std::vector<SplitEvent> splits;
    std::optional<PointerPair> pointer;
    std::optional<MarkerEventInfo> marker_event;
    double source_birth = 0.0;
    double t_end = 0.45;

    std::vector<const Branch*> alive(double t) const;
    /// Alive descendants of the given branch (inclusive) at time t.
    std::vector<const Branch*> alive_descendants(int id, double t) const;
    /// Times at which the field or particle dynamics change discontinuously.
    std::vector<double> event_times() const;
    const SplitEvent* split_at(double t) const;
};

/// Unrolls the optical graph. Throws std::invalid_argument on ambiguous
/// schedules (arrival at an activity endpoint within 1e-12) and on double
/// marker interaction.
BranchTimeline build_timeline(const Layout& layout, const MarkerModel& marker);

/// Evaluation of the coherent sum over the given branches with per-branch
/// extra factors (marker conditioning), including exact derivatives.
struct FieldEval {
    Cplx psi;
    Cplx ddx;
    Cplx ddy;
    Cplx lap;
};

FieldEval superpose(const std::vector<const Branch*>& branches,
                    const std::vector<Cplx>& factors, const Vec2& r, double t);

/// Largest per-branch peak contribution |c_b| * peak_b(t) * |factor_b|; the
/// node floor is defined relative to this scale.
double peak_scale(const std::vector<const Branch*>& branches,
                  const std::vector<Cplx>& factors, double t);

} // namespace pilotmz
