#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "mechlogic/gate.hpp"

namespace mechlogic::gate {

namespace {

struct Curve {
    const NorTemplate<double> &t;
    dyn::Oscillator<double> g, c;
    double omega, p;

    Curve(const NorTemplate<double> &tm, double w, double f1, double f2)
        : t(tm), g(tm.gate.oscillator("g")), c(tm.channel.oscillator("c")), omega(w), p(f1 * f1 + f2 * f2) {}

    double channel_amplitude(double x) const {
        return dyn::linear_response(c, t.channel.k - 2 * t.gamma_ic * x, t.f_channel, omega).amplitude;
    }
    double chi(double x) const {
        return dyn::linear_response(g, t.gate.k + 2 * t.gamma_ig * x, 1.0, omega).amplitude;
    }
    // each logical input drives two gates, each contributing |u|^2 / 2
    double residual(double x) const {
        const double a = channel_amplitude(x), h = chi(x);
        return 0.5 * t.gamma_ic * a * a - t.gamma_ig * h * h * p - t.insulator.k * x;
    }
};

void add_dense(std::vector<double> &xs, double centre, double width, double lo, double hi) {
    constexpr int n = 1500;
    for (int i = 0; i <= n; ++i) {
        const double x = centre + width * (-50.0 + 100.0 * i / n);
        if (x > lo && x < hi) xs.push_back(x);
    }
}

// Output depends on the drives only through f1^2 + f2^2.
std::size_t roots_at(const NorTemplate<double> &t, double omega, double p) {
    return steady_state_nor(t, omega, std::sqrt(p), 0.0).size();
}

// Relative input amplitude between the valid rows and the bistable range:
// from the strongest (0,0) corner up to its onset, and from the weakest
// other corner down to its end. The smaller of the two.
double fold_distance(const NorTemplate<double> &t, const LogicReference<double> &ref, double omega) {
    const double f_hi = ref.zero_band[1] * ref.f_ref;
    const double f_lo = std::hypot(ref.zero_band[0], ref.one_band[0]) * ref.f_ref / std::sqrt(2.0);
    const double p0 = 2 * f_hi * f_hi, p1 = 2 * f_lo * f_lo;
    if (roots_at(t, omega, p0) != 1 || roots_at(t, omega, p1) != 1) return -1;
    constexpr int n = 64;
    auto at = [&](int i) { return p0 + (p1 - p0) * i / n; };
    int first = -1, last = -1;
    for (int i = 1; i < n; ++i) {
        if (roots_at(t, omega, at(i)) != 1) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0) return std::sqrt(p1 / p0) - 1;
    auto edge = [&](double single, double multi) {
        for (int k = 0; k < 30; ++k) {
            const double m = 0.5 * (single + multi);
            (roots_at(t, omega, m) == 1 ? single : multi) = m;
        }
        return single;
    };
    const double onset = edge(at(first - 1), at(first));
    const double end = edge(at(last + 1), at(last));
    return std::min(std::sqrt(onset / p0), std::sqrt(p1 / end)) - 1;
}

}  // namespace

double steady_residual(const NorTemplate<double> &t, double omega, double f1, double f2, double u_i) {
    return Curve(t, omega, f1, f2).residual(u_i);
}

std::vector<SteadyRoot<double>> steady_state_nor(const NorTemplate<double> &t, double omega, double f1,
                                                 double f2) {
    if (f1 < 0 || f2 < 0) throw GateError("gate drive amplitudes must be non-negative");
    const Curve cv(t, omega, f1, f2);
    // R > 0 below lo and R < 0 above hi, so every root lies in between
    const double chi_max = 1.0 / (cv.g.c * omega);
    const double a_max = t.f_channel / (cv.c.c * omega);
    const double lo = -t.gamma_ig * cv.p * chi_max * chi_max / t.insulator.k * 1.01 - 1e-12;
    const double hi = 0.5 * t.gamma_ic * a_max * a_max / t.insulator.k * 1.01 + 1e-12;

    std::vector<double> xs;
    constexpr int base = 4000;
    for (int i = 0; i <= base; ++i) xs.push_back(lo + (hi - lo) * i / base);
    const double x_gate = (t.gate.m * omega * omega - t.gate.k) / (2 * t.gamma_ig);
    const double x_chan = (t.channel.k - t.channel.m * omega * omega) / (2 * t.gamma_ic);
    add_dense(xs, x_gate, cv.g.c * omega / (2 * t.gamma_ig), lo, hi);
    add_dense(xs, x_chan, cv.c.c * omega / (2 * t.gamma_ic), lo, hi);
    std::sort(xs.begin(), xs.end());

    std::vector<SteadyRoot<double>> roots;
    double x0 = xs.front(), r0 = cv.residual(x0);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double x1 = xs[i];
        const double r1 = cv.residual(x1);
        if (r0 == 0) {
            roots.push_back({x0, cv.channel_amplitude(x0)});
        } else if ((r0 < 0) != (r1 < 0) && r1 != 0) {
            double a = x0, b = x1, ra = r0;
            for (int it = 0; it < 200 && b - a > 0; ++it) {
                const double m = 0.5 * (a + b);
                if (m <= a || m >= b) break;
                const double rm = cv.residual(m);
                if (rm == 0) {
                    a = b = m;
                    break;
                }
                if ((rm < 0) == (ra < 0)) {
                    a = m;
                    ra = rm;
                } else {
                    b = m;
                }
            }
            const double x = std::abs(cv.residual(a)) <= std::abs(cv.residual(b)) ? a : b;
            roots.push_back({x, cv.channel_amplitude(x)});
        }
        x0 = x1;
        r0 = r1;
    }
    if (r0 == 0) roots.push_back({x0, cv.channel_amplitude(x0)});
    if (roots.empty()) throw GateError("no steady state found in the scan range");
    return roots;
}

CalibrationResult evaluate_frequency(const NorTemplate<double> &t, const LogicReference<double> &ref,
                                     double omega, int grid) {
    CalibrationResult res;
    res.omega = omega;
    res.margin = 1e300;
    for (int r = 0; r < 4; ++r) {
        const bool in1 = r & 2, in2 = r & 1;
        const bool want_one = !in1 && !in2;
        for (const auto &p : band_points(ref, in1, in2, grid)) {
            CalibrationPoint cp;
            cp.in1 = in1;
            cp.in2 = in2;
            cp.f1 = p[0];
            cp.f2 = p[1];
            const auto roots = steady_state_nor(t, omega, p[0], p[1]);
            cp.roots = roots.size();
            if (roots.size() == 1) {
                cp.amplitude = roots[0].channel_amplitude;
                cp.level = classify(cp.amplitude, ref, Quantity::Displacement);
                cp.margin = band_margin(cp.amplitude / ref.u_ref, want_one ? ref.one_band : ref.zero_band);
            } else {
                cp.margin = -1;
            }
            res.margin = std::min(res.margin, cp.margin);
            res.points.push_back(cp);
        }
    }
    res.output_margin = res.margin;
    res.fold_distance = fold_distance(t, ref, omega);
    res.margin = std::min(res.output_margin, res.fold_distance);
    res.valid = res.margin >= 0;
    return res;
}

namespace {

// Search objective, ordered in tiers: a valid frequency scores its margin
// (>= -1), one with correct unique outputs but a nearby fold scores the fold
// distance, anything else scores its best-root band margin minus 2 so the
// scan still has a slope to follow.
double search_score(const NorTemplate<double> &t, const LogicReference<double> &ref, double omega) {
    double best = 1e300;
    bool unique = true;
    for (int r = 0; r < 4; ++r) {
        const bool in1 = r & 2, in2 = r & 1;
        const auto &band = !in1 && !in2 ? ref.one_band : ref.zero_band;
        for (const auto &p : band_points(ref, in1, in2)) {
            double m = -1e300;
            const auto roots = steady_state_nor(t, omega, p[0], p[1]);
            for (const auto &rt : roots) m = std::max(m, band_margin(rt.channel_amplitude / ref.u_ref, band));
            unique = unique && roots.size() == 1;
            best = std::min(best, m);
        }
    }
    if (!unique || best < 0) return std::max(best, -1e6) - 2;
    return std::min(best, fold_distance(t, ref, omega));
}

double settle_margin(const NorTemplate<double> &t, const LogicReference<double> &ref, double omega,
                     int settle_periods) {
    double worst = 1e300;
    for (const auto &r : truth_table_ode(t, ref, omega, settle_periods, true)) {
        const auto &band = r.expected_one ? ref.one_band : ref.zero_band;
        worst = std::min(worst, band_margin(r.amplitude / ref.u_ref, band));
    }
    return worst;
}

}  // namespace

CalibrationResult calibrate_operating_frequency(const NorTemplate<double> &t,
                                                const LogicReference<double> &ref,
                                                const FrequencySweep &sweep_in) {
    FrequencySweep sweep = sweep_in;
    if (sweep.lo == 0 && sweep.hi == 0) {
        const double wc = std::sqrt(t.channel.k / t.channel.m);
        const double span = std::min(0.5, 10.0 / t.channel.q);
        sweep.lo = (1 - span) * wc;
        sweep.hi = (1 + span) * wc;
    }
    if (!(sweep.lo > 0) || !(sweep.hi > sweep.lo) || sweep.points < 2) {
        throw GateError("bad frequency sweep");
    }
    t.validate();
    auto scan = [&](double lo, double hi, int n) {
        std::vector<double> scores(static_cast<std::size_t>(n));
        const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
        std::vector<std::future<void>> jobs;
        for (unsigned w = 0; w < workers; ++w) {
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (int i = static_cast<int>(w); i < n; i += static_cast<int>(workers)) {
                    const double om = lo + (hi - lo) * i / (n - 1);
                    double m;
                    try {
                        m = search_score(t, ref, om);
                    } catch (const std::exception &) {
                        m = -1e300;
                    }
                    scores[static_cast<std::size_t>(i)] = m;
                }
            }));
        }
        for (auto &j : jobs) j.get();
        const auto best = std::max_element(scores.begin(), scores.end()) - scores.begin();
        return std::pair{lo + (hi - lo) * static_cast<double>(best) / (n - 1), scores[static_cast<std::size_t>(best)]};
    };
    double step = (sweep.hi - sweep.lo) / (sweep.points - 1);
    auto [best, score] = scan(sweep.lo, sweep.hi, sweep.points);
    for (int r = 0; r < sweep.refine; ++r) {
        const double lo = std::max(sweep.lo, best - 2 * step), hi = std::min(sweep.hi, best + 2 * step);
        auto [b, m] = scan(lo, hi, 41);
        if (m >= score) {
            best = b;
            score = m;
        }
        step = (hi - lo) / 40;
    }
    if (sweep.settle_periods <= 0 || score < 0) return evaluate_frequency(t, ref, best);

    // the steady-state optimum can sit next to a fold where the slowest corner
    // has not settled in time; re-rank the whole valid window
    const double coarse = (sweep.hi - sweep.lo) / (sweep.points - 1);
    double lo = best, hi = best;
    while (lo - coarse > sweep.lo && search_score(t, ref, lo - coarse) >= 0) lo -= coarse;
    while (hi + coarse < sweep.hi && search_score(t, ref, hi + coarse) >= 0) hi += coarse;
    lo = std::max(sweep.lo, lo - coarse);
    hi = std::min(sweep.hi, hi + coarse);
    const int n = std::max(2, sweep.settle_points);
    double pick = best, pick_score = -1e300, pick_td = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < n; ++i) {
        const double om = lo + (hi - lo) * i / (n - 1);
        const double ss = search_score(t, ref, om);
        if (ss < 0) continue;
        const double td = settle_margin(t, ref, om, sweep.settle_periods);
        if (std::min(ss, td) > pick_score) {
            pick = om;
            pick_score = std::min(ss, td);
            pick_td = td;
        }
    }
    auto r = evaluate_frequency(t, ref, pick);
    r.settle_margin = pick_td;
    r.valid = r.valid && pick_td >= 0;
    return r;
}

}  // namespace mechlogic::gate
