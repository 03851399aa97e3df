#include "mechlogic/gate.hpp"

#include <algorithm>
#include <complex>
#include <thread>

namespace mechlogic::gate {

template <>
NorTemplate<double> NorTemplate<double>::reconstructed() {
    NorTemplate t;
    t.channel = {6.0, 200.0, 1699.171292};
    t.gamma_ic = 136.87306;
    t.f_channel = 0.147649;
    return t;
}

template <class S>
void NorTemplate<S>::validate() const {
    for (const auto *o : {&gate, &insulator, &channel}) {
        if (!(o->m > 0)) throw GateError("template masses must be positive");
        if (!(o->q > 0)) throw GateError("template quality factors must be positive");
        if (!(o->k > 0)) throw GateError("template stiffnesses must be positive");
    }
}

template struct NorTemplate<double>;

const char *to_string(LogicLevel l) {
    switch (l) {
        case LogicLevel::Zero: return "Zero";
        case LogicLevel::One: return "One";
        default: return "Ambiguous";
    }
}

std::vector<std::array<double, 2>> band_points(const LogicReference<double> &ref, bool in1, bool in2,
                                               int grid) {
    const auto &b1 = in1 ? ref.one_band : ref.zero_band;
    const auto &b2 = in2 ? ref.one_band : ref.zero_band;
    std::vector<std::array<double, 2>> pts;
    if (grid <= 0) {
        pts.push_back({ref.drive(in1), ref.drive(in2)});
        for (int i = 0; i < 4; ++i) {
            pts.push_back({b1[i & 1] * ref.f_ref, b2[(i >> 1) & 1] * ref.f_ref});
        }
        return pts;
    }
    auto at = [&](const std::array<double, 2> &b, int i) {
        return grid == 1 ? 0.5 * (b[0] + b[1]) : b[0] + (b[1] - b[0]) * i / (grid - 1);
    };
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) pts.push_back({at(b1, i) * ref.f_ref, at(b2, j) * ref.f_ref});
    }
    return pts;
}

std::vector<OdeRow> truth_table_ode(const NorTemplate<double> &t, const LogicReference<double> &ref,
                                    double omega, int settle_periods, bool corners) {
    std::vector<OdeRow> rows;
    for (int r = 0; r < 4; ++r) {
        const bool in1 = r & 2, in2 = r & 1;
        const auto pts = corners ? band_points(ref, in1, in2, 0)
                                 : std::vector<std::array<double, 2>>{{ref.drive(in1), ref.drive(in2)}};
        for (const auto &p : pts) {
            OdeRow row{in1, in2, p[0], p[1], 0, LogicLevel::Ambiguous, !in1 && !in2};
            row.amplitude = nor_ode_amplitude(t, ref, omega, p[0], p[1], settle_periods);
            row.level = classify(row.amplitude, ref, Quantity::Displacement);
            rows.push_back(row);
        }
    }
    return rows;
}

double nor_ode_amplitude(const NorTemplate<double> &t, const LogicReference<double> &ref, double omega,
                         double f1, double f2, int settle_periods, int window, double dt_periods,
                         double extra_phase2) {
    NorNetworkBuilder<double> nb(t, ref, omega);
    const NorInstance n = nb.instantiate_nor("nor");
    nb.drive_input_force(n.input(0), f1);
    nb.drive_input_force(n.input(1), f2, extra_phase2);
    const auto sys = nb.builder().build();
    dyn::Rk4<double> rk(sys, omega, dt_periods);
    auto s = dyn::State<double>::zero(sys.size());
    const auto steps_per_period = static_cast<std::size_t>(std::llround(1.0 / dt_periods));
    const std::size_t total = steps_per_period * static_cast<std::size_t>(settle_periods);
    dyn::Demodulator<double> dm(omega, rk.dt(), window);
    const std::size_t start = total - steps_per_period * static_cast<std::size_t>(window);
    rk.attach(s);
    for (std::size_t i = 0; i < total; ++i) {
        rk.step(s);
        if (i >= start) dm.push(s.t, s.u[static_cast<Eigen::Index>(n.channel)]);
    }
    return dm.amplitude();
}

BackAction back_action(const NorTemplate<double> &t, const LogicReference<double> &ref, double omega,
                       double u_lo, double u_hi, int samples) {
    using C = std::complex<double>;
    const auto g = t.gate.oscillator("g");
    const double k = ref.k_couple();
    double s_min = 1e300, s_max = -1e300, a_min = 1e300, a_max = -1e300;
    for (int i = 0; i < samples; ++i) {
        const double u = u_lo + (u_hi - u_lo) * i / std::max(1, samples - 1);
        const auto r = dyn::linear_response(g, t.gate.k + 2 * t.gamma_ig * u, 1.0, omega);
        const C chi = std::polar(r.amplitude, r.phase);
        // unit channel motion: spring pushes gate_s with k, dashpot pushes gate_d with i k
        const C us = k * chi;
        const C ud = C(0, k) * chi;
        const C f_spring = k * us;
        const C f_dashpot = C(0, k) * ud;  // c * (i omega) * ud with c = k / omega
        const double single = std::abs(f_spring);
        const double aggregate = std::abs(f_spring + f_dashpot);
        s_min = std::min(s_min, single);
        s_max = std::max(s_max, single);
        a_min = std::min(a_min, aggregate);
        a_max = std::max(a_max, aggregate);
    }
    return {s_max - s_min, a_max - a_min};
}

}  // namespace mechlogic::gate
