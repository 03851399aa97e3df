#pragma once

// Networks of damped oscillators with linear springs, dashpots, cubic
// couplings (V = gamma u^2 v) and harmonic drives, integrated by fixed-step RK4.

#include <cmath>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mechlogic::dyn {

using Index = std::size_t;

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

class DynamicsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-finite force or state during integration.
class IntegrationFault : public DynamicsError {
  public:
    IntegrationFault(Index oscillator, std::string label, double time, const std::string &what)
        : DynamicsError(what + " at oscillator " + std::to_string(oscillator) + " (" + label +
                        ") t=" + std::to_string(time)),
          oscillator_(oscillator),
          label_(std::move(label)),
          time_(time) {}
    Index oscillator() const { return oscillator_; }
    const std::string &label() const { return label_; }
    double time() const { return time_; }

  private:
    Index oscillator_;
    std::string label_;
    double time_;
};

template <class S>
struct Oscillator {
    S m{1};
    S c{0};
    S k{0};
    std::string label;

    /// c = m w / Q, k = m w^2.
    static Oscillator from_mqw(S m, S q, S w, std::string label = {}) {
        if (!(m > 0) || !(q > 0) || !(w > 0)) throw DynamicsError("m, Q and w must be positive");
        return {m, m * w / q, m * w * w, std::move(label)};
    }
    S natural_frequency() const { return std::sqrt(k / m); }
    S quality() const { return m * natural_frequency() / c; }
};

template <class S>
struct LinearSpring {
    Index a, b;
    S k;
};

template <class S>
struct Dashpot {
    Index a, b;
    S c;
};

/// Potential gamma * u^2 * v.
template <class S>
struct CubicCoupling {
    Index u, v;
    S gamma;
};

template <class S>
struct HarmonicDrive {
    Index target;
    S amplitude;
    S omega;
    S phase;
};

template <class S>
class MechanicalSystem;

template <class S>
class SystemBuilder {
  public:
    Index add_oscillator(Oscillator<S> o) {
        if (!(o.m > 0)) throw DynamicsError("oscillator mass must be positive: " + o.label);
        osc_.push_back(std::move(o));
        return osc_.size() - 1;
    }
    Index add_spring(Index a, Index b, S k) {
        check_pair(a, b);
        springs_.push_back({a, b, k});
        return springs_.size() - 1;
    }
    Index add_dashpot(Index a, Index b, S c) {
        check_pair(a, b);
        dashpots_.push_back({a, b, c});
        return dashpots_.size() - 1;
    }
    Index add_cubic(Index u, Index v, S gamma) {
        check_pair(u, v);
        cubics_.push_back({u, v, gamma});
        return cubics_.size() - 1;
    }
    Index add_drive(Index target, S amplitude, S omega, S phase = 0) {
        check(target);
        if (!(omega > 0)) throw DynamicsError("drive frequency must be positive");
        drives_.push_back({target, amplitude, omega, phase});
        return drives_.size() - 1;
    }

    Oscillator<S> &oscillator(Index i) {
        check(i);
        return osc_[i];
    }
    const std::vector<Oscillator<S>> &oscillators() const { return osc_; }
    std::size_t size() const { return osc_.size(); }
    std::size_t spring_count() const { return springs_.size(); }
    std::size_t dashpot_count() const { return dashpots_.size(); }
    std::size_t cubic_count() const { return cubics_.size(); }
    std::size_t drive_count() const { return drives_.size(); }

    MechanicalSystem<S> build() const { return MechanicalSystem<S>(*this); }

  private:
    friend class MechanicalSystem<S>;
    void check(Index i) const {
        if (i >= osc_.size()) throw DynamicsError("oscillator index out of range");
    }
    void check_pair(Index a, Index b) const {
        check(a);
        check(b);
        if (a == b) throw DynamicsError("element endpoints must differ");
    }

    std::vector<Oscillator<S>> osc_;
    std::vector<LinearSpring<S>> springs_;
    std::vector<Dashpot<S>> dashpots_;
    std::vector<CubicCoupling<S>> cubics_;
    std::vector<HarmonicDrive<S>> drives_;
};

/// Immutable system. Force terms are summed per element list, each in
/// insertion order, so evaluations are bit-reproducible.
template <class S>
class MechanicalSystem {
  public:
    explicit MechanicalSystem(const SystemBuilder<S> &b)
        : osc_(b.osc_), springs_(b.springs_), dashpots_(b.dashpots_), cubics_(b.cubics_),
          drives_(b.drives_) {
        const auto n = static_cast<Eigen::Index>(osc_.size());
        m_inv_.resize(n);
        c_.resize(n);
        k_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto &o = osc_[static_cast<Index>(i)];
            m_inv_[i] = S(1) / o.m;
            c_[i] = o.c;
            k_[i] = o.k;
            if (o.c < 0 || o.k < 0) negative_.push_back(static_cast<Index>(i));
        }
        // drives sharing (omega, phase) share one sine per evaluation
        std::map<std::pair<S, S>, Index> groups;
        for (const auto &d : drives_) {
            auto [it, fresh] = groups.emplace(std::make_pair(d.omega, d.phase), phasors_.size());
            if (fresh) phasors_.push_back({d.omega, d.phase});
            drive_group_.push_back(it->second);
        }
    }

    std::size_t size() const { return osc_.size(); }
    const std::vector<Oscillator<S>> &oscillators() const { return osc_; }
    const std::vector<LinearSpring<S>> &springs() const { return springs_; }
    const std::vector<Dashpot<S>> &dashpots() const { return dashpots_; }
    const std::vector<CubicCoupling<S>> &cubics() const { return cubics_; }
    const std::vector<HarmonicDrive<S>> &drives() const { return drives_; }
    /// Oscillators whose local damping or stiffness is negative.
    const std::vector<Index> &negative_locals() const { return negative_; }

    Vec<S> drive_amplitudes() const {
        Vec<S> a(static_cast<Eigen::Index>(drives_.size()));
        for (Index i = 0; i < drives_.size(); ++i) a[static_cast<Eigen::Index>(i)] = drives_[i].amplitude;
        return a;
    }

    /// a = (F_drive + F_springs + F_dashpots + F_cubic - c v - k u) / m.
    void accelerations(const Vec<S> &u, const Vec<S> &v, S t, const Vec<S> &amps, Vec<S> &a,
                       std::vector<S> &sines) const {
        a.noalias() = -(c_.cwiseProduct(v) + k_.cwiseProduct(u));
        sines.resize(phasors_.size());
        for (Index g = 0; g < phasors_.size(); ++g) {
            sines[g] = std::sin(phasors_[g].first * t + phasors_[g].second);
        }
        S *ap = a.data();
        const S *up = u.data();
        const S *vp = v.data();
        for (Index i = 0; i < drives_.size(); ++i) {
            ap[drives_[i].target] += amps[static_cast<Eigen::Index>(i)] * sines[drive_group_[i]];
        }
        for (const auto &s : springs_) {
            const S f = s.k * (up[s.b] - up[s.a]);
            ap[s.a] += f;
            ap[s.b] -= f;
        }
        for (const auto &d : dashpots_) {
            const S f = d.c * (vp[d.b] - vp[d.a]);
            ap[d.a] += f;
            ap[d.b] -= f;
        }
        for (const auto &c : cubics_) {
            const S x = up[c.u];
            ap[c.u] -= 2 * c.gamma * x * up[c.v];
            ap[c.v] -= c.gamma * x * x;
        }
        a.array() *= m_inv_.array();
    }

    /// Checked single evaluation with the built-in drive amplitudes.
    Vec<S> compute_accelerations(const Vec<S> &u, const Vec<S> &v, S t) const {
        if (static_cast<std::size_t>(u.size()) != size() || static_cast<std::size_t>(v.size()) != size()) {
            throw DynamicsError("state size does not match the system");
        }
        Vec<S> a(u.size());
        std::vector<S> sines;
        accelerations(u, v, t, drive_amplitudes(), a, sines);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (!std::isfinite(static_cast<double>(a[i]))) {
                throw IntegrationFault(static_cast<Index>(i), osc_[static_cast<Index>(i)].label,
                                       static_cast<double>(t), "non-finite force");
            }
        }
        return a;
    }

    /// Kinetic + quadratic + spring + cubic potential energy.
    S energy(const Vec<S> &u, const Vec<S> &v) const {
        S e = 0;
        for (Index i = 0; i < osc_.size(); ++i) {
            const auto j = static_cast<Eigen::Index>(i);
            e += S(0.5) * osc_[i].m * v[j] * v[j] + S(0.5) * osc_[i].k * u[j] * u[j];
        }
        for (const auto &s : springs_) {
            const S d = u[static_cast<Eigen::Index>(s.b)] - u[static_cast<Eigen::Index>(s.a)];
            e += S(0.5) * s.k * d * d;
        }
        for (const auto &c : cubics_) {
            const S x = u[static_cast<Eigen::Index>(c.u)];
            e += c.gamma * x * x * u[static_cast<Eigen::Index>(c.v)];
        }
        return e;
    }

  private:
    std::vector<Oscillator<S>> osc_;
    std::vector<LinearSpring<S>> springs_;
    std::vector<Dashpot<S>> dashpots_;
    std::vector<CubicCoupling<S>> cubics_;
    std::vector<HarmonicDrive<S>> drives_;
    std::vector<Index> negative_;
    std::vector<std::pair<S, S>> phasors_;
    std::vector<Index> drive_group_;
    Vec<S> m_inv_, c_, k_;
};

template <class S>
struct State {
    Vec<S> u;
    Vec<S> v;
    S t = 0;

    static State zero(std::size_t n) {
        const auto m = static_cast<Eigen::Index>(n);
        return {Vec<S>::Zero(m), Vec<S>::Zero(m), S(0)};
    }
};

/// Uniformly sampled displacement record.
template <class S>
struct Trace {
    Index index = 0;
    std::string label;
    S sample_period = 0;
    S start_time = 0;
    std::vector<S> samples;
};

/// Fixed-step classic RK4. Drive amplitudes can be changed between steps.
template <class S>
class Rk4 {
  public:
    /// dt is given in periods of the reference angular frequency omega.
    Rk4(const MechanicalSystem<S> &sys, S omega, S dt_periods = S(0.025))
        : sys_(sys), omega_(omega), amps_(sys.drive_amplitudes()) {
        if (!(omega > 0)) throw DynamicsError("reference frequency must be positive");
        if (!(dt_periods > 0) || dt_periods > S(0.05)) {
            throw DynamicsError("dt must lie in (0, 0.05] periods");
        }
        dt_ = dt_periods * 2 * std::numbers::pi_v<S> / omega;
        const auto n = static_cast<Eigen::Index>(sys.size());
        for (auto *w : {&k1u_, &k1v_, &k2u_, &k2v_, &k3u_, &k3v_, &k4u_, &k4v_, &tu_, &tv_}) w->resize(n);
    }

    S dt() const { return dt_; }
    S omega() const { return omega_; }
    S period() const { return 2 * std::numbers::pi_v<S> / omega_; }
    void set_drive_amplitude(Index drive, S amplitude) {
        amps_[static_cast<Eigen::Index>(drive)] = amplitude;
    }
    S drive_amplitude(Index drive) const { return amps_[static_cast<Eigen::Index>(drive)]; }

    void step(State<S> &s) {
        const S h = dt_;
        sys_.accelerations(s.u, s.v, s.t, amps_, k1v_, sines_);
        k1u_ = s.v;
        tu_ = s.u + (h / 2) * k1u_;
        tv_ = s.v + (h / 2) * k1v_;
        sys_.accelerations(tu_, tv_, s.t + h / 2, amps_, k2v_, sines_);
        k2u_ = tv_;
        tu_ = s.u + (h / 2) * k2u_;
        tv_ = s.v + (h / 2) * k2v_;
        sys_.accelerations(tu_, tv_, s.t + h / 2, amps_, k3v_, sines_);
        k3u_ = tv_;
        tu_ = s.u + h * k3u_;
        tv_ = s.v + h * k3v_;
        sys_.accelerations(tu_, tv_, s.t + h, amps_, k4v_, sines_);
        k4u_ = tv_;
        s.u += (h / 6) * (k1u_ + 2 * k2u_ + 2 * k3u_ + k4u_);
        s.v += (h / 6) * (k1v_ + 2 * k2v_ + 2 * k3v_ + k4v_);
        ++steps_;
        s.t = t0_ + static_cast<S>(steps_) * h;
        if (!(s.u.allFinite() && s.v.allFinite())) fault(s);
    }

    /// Continue time from an existing state (keeps t exact as start + n*dt).
    void attach(const State<S> &s) {
        t0_ = s.t;
        steps_ = 0;
    }

    /// Time origin and step count since attach(); resume() restores both so a
    /// reloaded run sees the same time values.
    S origin() const { return t0_; }
    std::size_t attached_steps() const { return steps_; }
    void resume(S origin, std::size_t steps) {
        t0_ = origin;
        steps_ = steps;
    }

    void run(State<S> &s, std::size_t n_steps) {
        attach(s);
        for (std::size_t i = 0; i < n_steps; ++i) step(s);
    }

    /// Integrates, recording every `every`-th step for each probe.
    std::vector<Trace<S>> run(State<S> &s, std::size_t n_steps, const std::vector<Index> &probes,
                              std::size_t every = 1) {
        attach(s);
        std::vector<Trace<S>> traces;
        for (Index p : probes) {
            Trace<S> tr;
            tr.index = p;
            tr.label = sys_.oscillators().at(p).label;
            tr.sample_period = dt_ * static_cast<S>(every);
            tr.start_time = s.t + tr.sample_period;
            tr.samples.reserve(n_steps / every + 1);
            traces.push_back(std::move(tr));
        }
        for (std::size_t i = 1; i <= n_steps; ++i) {
            step(s);
            if (i % every == 0) {
                for (auto &tr : traces) tr.samples.push_back(s.u[static_cast<Eigen::Index>(tr.index)]);
            }
        }
        return traces;
    }

  private:
    [[noreturn]] void fault(const State<S> &s) const {
        for (Index i = 0; i < sys_.size(); ++i) {
            const auto j = static_cast<Eigen::Index>(i);
            if (!std::isfinite(static_cast<double>(s.u[j])) || !std::isfinite(static_cast<double>(s.v[j]))) {
                throw IntegrationFault(i, sys_.oscillators()[i].label, static_cast<double>(s.t),
                                       "non-finite state");
            }
        }
        throw IntegrationFault(0, "", static_cast<double>(s.t), "non-finite state");
    }

    const MechanicalSystem<S> &sys_;
    S omega_;
    S dt_;
    S t0_ = 0;
    std::size_t steps_ = 0;
    Vec<S> amps_;
    Vec<S> k1u_, k1v_, k2u_, k2v_, k3u_, k3v_, k4u_, k4v_, tu_, tv_;
    std::vector<S> sines_;
};

// ---------------------------------------------------------------------------
// Amplitude measurement

/// Quadrature amplitude over the trailing `window_periods` periods of a trace.
template <class S>
S demodulate(const Trace<S> &tr, S omega, int window_periods) {
    if (window_periods < 1) throw DynamicsError("demodulation window must be at least one period");
    const S period = 2 * std::numbers::pi_v<S> / omega;
    const S span = period * static_cast<S>(window_periods);
    const auto n = static_cast<std::size_t>(std::llround(span / tr.sample_period));
    if (n == 0 || n > tr.samples.size()) throw DynamicsError("trace shorter than the demodulation window");
    const std::size_t first = tr.samples.size() - n;
    S is = 0, ic = 0;
    for (std::size_t i = first; i < tr.samples.size(); ++i) {
        const S t = tr.start_time + static_cast<S>(i) * tr.sample_period;
        is += tr.samples[i] * std::sin(omega * t);
        ic += tr.samples[i] * std::cos(omega * t);
    }
    return 2 * std::sqrt(is * is + ic * ic) / static_cast<S>(n);
}

/// Streaming version of `demodulate`: push one sample per step; the
/// amplitude covers the most recent full window.
template <class S>
class Demodulator {
  public:
    Demodulator(S omega, S sample_period, int window_periods)
        : omega_(omega), dt_(sample_period) {
        if (window_periods < 1) throw DynamicsError("demodulation window must be at least one period");
        const S span = 2 * std::numbers::pi_v<S> / omega * static_cast<S>(window_periods);
        n_ = static_cast<std::size_t>(std::llround(span / sample_period));
        ring_s_.assign(n_, 0);
        ring_c_.assign(n_, 0);
    }
    void push(S t, S u) {
        const S ps = u * std::sin(omega_ * t), pc = u * std::cos(omega_ * t);
        sum_s_ += ps - ring_s_[pos_];
        sum_c_ += pc - ring_c_[pos_];
        ring_s_[pos_] = ps;
        ring_c_[pos_] = pc;
        pos_ = (pos_ + 1) % n_;
        if (count_ < n_) ++count_;
        // refresh the running sums once per window to stop rounding drift
        if (pos_ == 0) {
            sum_s_ = sum_c_ = 0;
            for (std::size_t i = 0; i < n_; ++i) {
                sum_s_ += ring_s_[i];
                sum_c_ += ring_c_[i];
            }
        }
    }
    bool ready() const { return count_ == n_; }
    S amplitude() const { return 2 * std::sqrt(sum_s_ * sum_s_ + sum_c_ * sum_c_) / static_cast<S>(n_); }
    void reset() {
        std::fill(ring_s_.begin(), ring_s_.end(), S(0));
        std::fill(ring_c_.begin(), ring_c_.end(), S(0));
        sum_s_ = sum_c_ = 0;
        count_ = pos_ = 0;
    }

  private:
    S omega_, dt_;
    std::size_t n_ = 0, pos_ = 0, count_ = 0;
    std::vector<S> ring_s_, ring_c_;
    S sum_s_ = 0, sum_c_ = 0;
};

template <class S>
struct Response {
    S amplitude;
    S phase;
};

/// Steady-state linear response with the caller's effective stiffness.
template <class S>
Response<S> linear_response(const Oscillator<S> &o, S k_eff, S f0, S omega) {
    const S re = k_eff - o.m * omega * omega;
    const S im = o.c * omega;
    if (re == 0 && im == 0) throw DynamicsError("divergent response: undamped and on resonance");
    return {f0 / std::hypot(re, im), std::atan2(-im, re)};
}

/// CSV: time (periods of omega), then one column per trace; 9 significant digits.
void write_traces_csv(std::ostream &out, const std::vector<Trace<double>> &traces, double omega);

}  // namespace mechlogic::dyn
