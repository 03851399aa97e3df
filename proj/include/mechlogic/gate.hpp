#pragma once

// NOR building block: template constants, logic levels, instantiation and
// wiring into a MechanicalSystem, steady-state analysis and calibration.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mechlogic/dynamics.hpp"

namespace mechlogic::gate {

using dyn::Index;

/// Local oscillator constants as (m, Q, k); damping is sqrt(k m) / Q.
template <class S>
struct OscParams {
    S m;
    S q;
    S k;
    S c() const { return std::sqrt(k * m) / q; }
    dyn::Oscillator<S> oscillator(std::string label) const { return {m, c(), k, std::move(label)}; }
};

template <class S>
struct NorTemplate {
    OscParams<S> gate{S(0.2), S(200), S(25.582)};
    OscParams<S> insulator{S(1.0), S(1.5), S(0.394784)};
    OscParams<S> channel{S(6.0), S(1.5), S(14311.8)};
    S gamma_ig = 12;
    S gamma_ic = 6;
    S f_channel = S(1.326);

    /// The constants exactly as published.
    static NorTemplate published() { return {}; }
    /// Gate, insulator and coupling gamma_ig as published; channel stiffness,
    /// Q, drive and gamma_ic re-derived so the block can switch at all.
    static NorTemplate reconstructed();

    void validate() const;
};

/// Force and displacement references with the two logic bands.
template <class S>
struct LogicReference {
    S f_ref = S(0.7);
    S u_ref = S(0.0182);
    std::array<S, 2> zero_band{S(0.365), S(0.67)};
    std::array<S, 2> one_band{S(0.92), S(1.025)};
    S zero_level = S(0.5175);
    S one_level = S(0.9725);

    S k_couple() const { return f_ref / u_ref; }
    S drive(bool one) const { return (one ? one_level : zero_level) * f_ref; }
};

enum class LogicLevel { Zero, One, Ambiguous };
enum class Quantity { Force, Displacement };

const char *to_string(LogicLevel l);

/// Band membership, edges inclusive.
template <class S>
LogicLevel classify(S amplitude, const LogicReference<S> &ref, Quantity kind) {
    const S r = amplitude / (kind == Quantity::Force ? ref.f_ref : ref.u_ref);
    if (r >= ref.zero_band[0] && r <= ref.zero_band[1]) return LogicLevel::Zero;
    if (r >= ref.one_band[0] && r <= ref.one_band[1]) return LogicLevel::One;
    return LogicLevel::Ambiguous;
}

/// Relative distance inside the wanted band (negative when outside).
template <class S>
S band_margin(S amplitude_ratio, const std::array<S, 2> &band) {
    return std::min(amplitude_ratio / band[0] - 1, 1 - amplitude_ratio / band[1]);
}

/// A logical input: the spring-coupled and dashpot-coupled physical gates.
struct LogicalInput {
    Index gate_s;
    Index gate_d;
    bool operator<(const LogicalInput &o) const { return gate_s < o.gate_s; }
};

struct NorInstance {
    Index gate1_s, gate1_d, gate2_s, gate2_d, insulator, channel;
    Index channel_drive;
    LogicalInput input(int i) const {
        return i == 0 ? LogicalInput{gate1_s, gate1_d} : LogicalInput{gate2_s, gate2_d};
    }
};

struct DrivePair {
    Index spring_side;
    Index dashpot_side;
};

class GateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Builds networks of NOR blocks on top of a SystemBuilder.
template <class S>
class NorNetworkBuilder {
  public:
    NorNetworkBuilder(NorTemplate<S> tmpl, LogicReference<S> ref, S omega)
        : tmpl_(tmpl), ref_(ref), omega_(omega) {
        tmpl_.validate();
        if (!(omega > 0)) throw GateError("operating frequency must be calibrated (> 0)");
    }

    NorInstance instantiate_nor(const std::string &name = {}) {
        const std::string p = name.empty() ? "nor" + std::to_string(count_) : name;
        NorInstance n{};
        n.gate1_s = b_.add_oscillator(tmpl_.gate.oscillator(p + ".g1s"));
        n.gate1_d = b_.add_oscillator(tmpl_.gate.oscillator(p + ".g1d"));
        n.gate2_s = b_.add_oscillator(tmpl_.gate.oscillator(p + ".g2s"));
        n.gate2_d = b_.add_oscillator(tmpl_.gate.oscillator(p + ".g2d"));
        n.insulator = b_.add_oscillator(tmpl_.insulator.oscillator(p + ".ins"));
        n.channel = b_.add_oscillator(tmpl_.channel.oscillator(p + ".ch"));
        for (Index g : {n.gate1_s, n.gate1_d, n.gate2_s, n.gate2_d}) {
            b_.add_cubic(g, n.insulator, tmpl_.gamma_ig);
        }
        b_.add_cubic(n.channel, n.insulator, -tmpl_.gamma_ic);
        n.channel_drive = b_.add_drive(n.channel, tmpl_.f_channel, omega_, 0);
        ++count_;
        return n;
    }

    /// Spring to gate_s and dashpot to gate_d, with the diagonal terms
    /// subtracted locally so every oscillator keeps its template totals.
    void connect(Index source_channel, LogicalInput dest) {
        claim(dest);
        const S k = ref_.k_couple();
        const S c = k / omega_;
        b_.add_spring(source_channel, dest.gate_s, k);
        b_.add_dashpot(source_channel, dest.gate_d, c);
        b_.oscillator(source_channel).k -= k;
        b_.oscillator(dest.gate_s).k -= k;
        b_.oscillator(source_channel).c -= c;
        b_.oscillator(dest.gate_d).c -= c;
    }

    /// Quadrature drive pair at a nominal level.
    DrivePair drive_input(LogicalInput dest, bool one) { return drive_input_force(dest, ref_.drive(one)); }

    DrivePair drive_input_force(LogicalInput dest, S amplitude, S extra_phase = 0) {
        claim(dest);
        const S half_pi = std::numbers::pi_v<S> / 2;
        return {b_.add_drive(dest.gate_s, amplitude, omega_, extra_phase),
                b_.add_drive(dest.gate_d, amplitude, omega_, half_pi + extra_phase)};
    }

    /// Ties an unused input to a Zero force of 0 (no drive, just marks it used).
    void ground_input(LogicalInput dest) { claim(dest); }

    dyn::SystemBuilder<S> &builder() { return b_; }
    const dyn::SystemBuilder<S> &builder() const { return b_; }
    const NorTemplate<S> &tmpl() const { return tmpl_; }
    const LogicReference<S> &reference() const { return ref_; }
    S omega() const { return omega_; }
    std::size_t gate_count() const { return count_; }

  private:
    void claim(LogicalInput dest) {
        if (!used_.insert(dest.gate_s).second) throw GateError("logical input already driven or connected");
    }

    NorTemplate<S> tmpl_;
    LogicReference<S> ref_;
    S omega_;
    dyn::SystemBuilder<S> b_;
    std::set<Index> used_;
    std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Steady state

template <class S>
struct SteadyRoot {
    S u_insulator;
    S channel_amplitude;
};

/// Every equilibrium of the insulator for gate drive amplitudes f1, f2 (each
/// applied to both gates of its pair).
std::vector<SteadyRoot<double>> steady_state_nor(const NorTemplate<double> &t, double omega,
                                                 double f1, double f2);

/// Residual of the insulator balance at u_I.
double steady_residual(const NorTemplate<double> &t, double omega, double f1, double f2, double u_i);

struct CalibrationPoint {
    bool in1 = false, in2 = false;
    double f1 = 0, f2 = 0;
    std::size_t roots = 0;
    double amplitude = 0;  // channel amplitude when the root is unique
    LogicLevel level = LogicLevel::Ambiguous;
    double margin = 0;     // relative band margin, negative when wrong
};

struct CalibrationResult {
    double omega = 0;
    double margin = -1;         // min of output_margin and fold_distance
    double output_margin = -1;  // worst relative band margin over all points
    double fold_distance = -1;  // relative input amplitude between the valid
                                // corners and the bistable range
    /// Worst band margin of the time-domain truth table (corners included)
    /// after the sweep's settle time; NaN when not checked.
    double settle_margin = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
    std::vector<CalibrationPoint> points;
};

/// Band points evaluated per truth-table row: the nominal pair plus the
/// 4 band corners, or an n x n grid across both bands.
std::vector<std::array<double, 2>> band_points(const LogicReference<double> &ref, bool in1, bool in2,
                                               int grid = 0);

/// Truth table at one frequency over the nominal+corner points (grid = 0) or
/// an n x n grid per row. A (0,0) input close to the fold settles slowly from
/// rest, so the distance to it is part of the margin.
CalibrationResult evaluate_frequency(const NorTemplate<double> &t, const LogicReference<double> &ref,
                                     double omega, int grid = 0);

/// lo = hi = 0 picks the channel's natural frequency +- 10 linewidths
/// (at most +-50%).
struct FrequencySweep {
    double lo = 0;
    double hi = 0;
    int points = 8001;
    int refine = 3;  // zoom passes around the best point
    /// Time-domain check: frequencies in the valid window are re-ranked by
    /// min(steady-state score, truth-table margin after this many periods
    /// from rest). 0 skips it.
    int settle_periods = 3000;
    int settle_points = 41;
};

/// Sweeps omega and returns the one with the best worst-case margin.
CalibrationResult calibrate_operating_frequency(const NorTemplate<double> &t,
                                                const LogicReference<double> &ref,
                                                const FrequencySweep &sweep = {});

// ---------------------------------------------------------------------------
// Time domain

struct OdeRow {
    bool in1, in2;
    double f1, f2;
    double amplitude;
    LogicLevel level;
    bool expected_one;
};

/// Free-standing NOR with drive amplitudes f1, f2; returns the demodulated
/// channel amplitude after `settle_periods`.
double nor_ode_amplitude(const NorTemplate<double> &t, const LogicReference<double> &ref, double omega,
                         double f1, double f2, int settle_periods = 3000, int window = 50,
                         double dt_periods = 0.025, double extra_phase2 = 0);

/// The four rows at nominal levels, optionally with the band corners too.
std::vector<OdeRow> truth_table_ode(const NorTemplate<double> &t, const LogicReference<double> &ref,
                                    double omega, int settle_periods = 3000, bool corners = false);

// ---------------------------------------------------------------------------
// Back-action of a gate pair on its source channel

struct BackAction {
    double single_variation;     // spread of |spring-path back-action| over the range
    double aggregate_variation;  // spread of |spring + dashpot back-action|
    double ratio() const {
        return aggregate_variation > 0 ? single_variation / aggregate_variation
                                       : std::numeric_limits<double>::infinity();
    }
};

/// Sweeps u_I over [u_lo, u_hi] and measures per unit channel amplitude.
BackAction back_action(const NorTemplate<double> &t, const LogicReference<double> &ref, double omega,
                       double u_lo, double u_hi, int samples = 201);

}  // namespace mechlogic::gate
