#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mechlogic/dynamics.hpp"

using namespace mechlogic::dyn;

namespace {

constexpr double kPi = std::numbers::pi;

// driven pair with a cubic coupling, used for the order check
MechanicalSystem<double> nonlinear_pair() {
    SystemBuilder<double> b;
    b.add_oscillator({1.0, 0.05, 4.0, "a"});
    b.add_oscillator({0.5, 0.02, 1.0, "b"});
    b.add_spring(0, 1, 0.3);
    b.add_dashpot(0, 1, 0.01);
    b.add_cubic(0, 1, 0.8);
    b.add_drive(0, 0.4, 1.7, 0.0);
    return b.build();
}

State<double> run_pair(const MechanicalSystem<double> &sys, double dt_periods, double periods) {
    Rk4<double> rk(sys, 1.7, dt_periods);
    auto s = State<double>::zero(2);
    s.u[0] = 0.2;
    rk.run(s, static_cast<std::size_t>(std::llround(periods / dt_periods)));
    return s;
}

}  // namespace

TEST_CASE("accelerations: Hooke's law, equilibrium and the cubic sign") {
    SystemBuilder<double> b;
    b.add_oscillator({1.0, 0.0, 4.0, "x"});
    auto sys = b.build();
    Vec<double> u(1), v(1);
    u << 0.0;
    v << 0.0;
    CHECK(sys.compute_accelerations(u, v, 0.0)[0] == 0.0);
    u << 1.0;
    CHECK(sys.compute_accelerations(u, v, 0.0)[0] == doctest::Approx(-4.0));

    // channel/insulator pair: cubic contribution on the channel is +2*6*1*0.01
    SystemBuilder<double> c;
    c.add_oscillator({6.0, 0.0, 0.0, "ch"});
    c.add_oscillator({1.0, 0.0, 0.0, "ins"});
    c.add_cubic(0, 1, -6.0);
    auto sc = c.build();
    Vec<double> u2(2), v2 = Vec<double>::Zero(2);
    u2 << 0.01, 1.0;
    const auto a = sc.compute_accelerations(u2, v2, 0.0);
    CHECK(a[0] * 6.0 == doctest::Approx(0.12));
    CHECK(a[1] == doctest::Approx(6.0 * 0.01 * 0.01));
}

TEST_CASE("springs and dashpots act in equal and opposite pairs") {
    SystemBuilder<double> b;
    b.add_oscillator({2.0, 0.0, 0.0, "a"});
    b.add_oscillator({3.0, 0.0, 0.0, "b"});
    b.add_spring(0, 1, 5.0);
    b.add_dashpot(0, 1, 0.7);
    auto sys = b.build();
    Vec<double> u(2), v(2);
    u << 0.3, -0.1;
    v << 0.2, 0.9;
    const auto a = sys.compute_accelerations(u, v, 0.0);
    CHECK(2.0 * a[0] + 3.0 * a[1] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(2.0 * a[0] == doctest::Approx(5.0 * (-0.4) + 0.7 * 0.7));
}

TEST_CASE("builder validation and negative locals") {
    SystemBuilder<double> b;
    CHECK_THROWS_AS(b.add_oscillator({0.0, 0.0, 1.0, "m0"}), DynamicsError);
    b.add_oscillator({1.0, -0.1, 1.0, "neg"});
    b.add_oscillator({1.0, 0.1, 1.0, "ok"});
    CHECK_THROWS_AS(b.add_spring(0, 0, 1.0), DynamicsError);
    CHECK_THROWS_AS(b.add_cubic(0, 5, 1.0), DynamicsError);
    CHECK_THROWS_AS(b.add_drive(0, 1.0, 0.0), DynamicsError);
    auto sys = b.build();
    REQUIRE(sys.negative_locals().size() == 1);
    CHECK(sys.negative_locals()[0] == 0);
}

TEST_CASE("from_mqw round trip") {
    const auto o = Oscillator<double>::from_mqw(0.2, 200.0, 11.31);
    CHECK(o.quality() == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(o.natural_frequency() == doctest::Approx(11.31).epsilon(1e-12));
    CHECK_THROWS_AS(Oscillator<double>::from_mqw(0.2, 0.0, 1.0), DynamicsError);
}

TEST_CASE("undriven oscillator returns after one period") {
    SystemBuilder<double> b;
    b.add_oscillator({1.0, 0.0, 1.0, "x"});
    auto sys = b.build();
    // RK4 loses h^6/144 of amplitude per step on a harmonic oscillator:
    // 4.2e-6 over 40 steps, 1.3e-7 over 80
    for (auto [dt, tol] : {std::pair{0.025, 5e-6}, std::pair{0.0125, 1e-6}}) {
        Rk4<double> rk(sys, 1.0, dt);
        auto s = State<double>::zero(1);
        s.u[0] = 1.0;
        rk.run(s, static_cast<std::size_t>(std::llround(1.0 / dt)));
        CHECK(std::abs(s.u[0] - 1.0) < tol);
        CHECK(s.t == doctest::Approx(2 * kPi));
    }
}

TEST_CASE("driven linear oscillator matches the analytic response") {
    // Q = 20 at w0 = 2, driven slightly off resonance
    const auto o = Oscillator<double>::from_mqw(1.5, 20.0, 2.0, "x");
    const double w = 1.93, f0 = 0.8;
    SystemBuilder<double> b;
    b.add_oscillator(o);
    b.add_drive(0, f0, w, 0.0);
    auto sys = b.build();
    Rk4<double> rk(sys, w, 0.025);
    auto s = State<double>::zero(1);
    rk.run(s, 40 * 400);  // well past 10 Q periods
    auto tr = rk.run(s, 40 * 50, {0}, 1);
    const auto ref = linear_response(o, o.k, f0, w);
    CHECK(demodulate(tr[0], w, 50) == doctest::Approx(ref.amplitude).epsilon(1e-3));

    // phase: fit u = A sin(wt + phi)
    double is = 0, ic = 0;
    for (std::size_t i = 0; i < tr[0].samples.size(); ++i) {
        const double t = tr[0].start_time + static_cast<double>(i) * tr[0].sample_period;
        is += tr[0].samples[i] * std::sin(w * t);
        ic += tr[0].samples[i] * std::cos(w * t);
    }
    CHECK(std::atan2(ic, is) == doctest::Approx(ref.phase).epsilon(1e-3));
}

TEST_CASE("zero state with zero drives stays zero") {
    SystemBuilder<double> b;
    b.add_oscillator({1.0, 0.1, 3.0, "a"});
    b.add_oscillator({2.0, 0.1, 1.0, "b"});
    b.add_cubic(0, 1, 2.0);
    b.add_spring(0, 1, 0.5);
    b.add_drive(0, 0.0, 1.0);
    auto sys = b.build();
    Rk4<double> rk(sys, 1.0);
    auto s = State<double>::zero(2);
    rk.run(s, 4000);
    CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("demodulation of a pure tone") {
    const double w = 3.0;
    Trace<double> tr;
    tr.sample_period = 2 * kPi / w / 40;
    tr.start_time = 0.37;
    for (int i = 0; i < 40 * 60; ++i) {
        tr.samples.push_back(0.5 * std::sin(w * (tr.start_time + i * tr.sample_period) + 0.3));
    }
    for (int win : {1, 7, 50}) CHECK(std::abs(demodulate(tr, w, win) - 0.5) < 1e-9);
    CHECK_THROWS_AS(demodulate(tr, w, 61), DynamicsError);
    CHECK_THROWS_AS(demodulate(tr, w, 0), DynamicsError);

    Demodulator<double> dm(w, tr.sample_period, 50);
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        dm.push(tr.start_time + static_cast<double>(i) * tr.sample_period, tr.samples[i]);
    }
    CHECK(dm.ready());
    CHECK(std::abs(dm.amplitude() - 0.5) < 1e-9);

    Trace<double> zero = tr;
    std::fill(zero.samples.begin(), zero.samples.end(), 0.0);
    CHECK(demodulate(zero, w, 10) == 0.0);
}

TEST_CASE("linear_response limits") {
    const auto g = Oscillator<double>::from_mqw(0.2, 200.0, std::sqrt(25.582 / 0.2));
    const double wg = g.natural_frequency();
    const auto r = linear_response(g, 25.582, 0.7, wg);
    CHECK(r.amplitude == doctest::Approx(200 * 0.7 / 25.582).epsilon(1e-9));
    CHECK(r.amplitude == doctest::Approx(5.472).epsilon(1e-3));
    CHECK(r.phase == doctest::Approx(-kPi / 2));
    CHECK(linear_response(g, 25.582, 0.7, 1e-6).amplitude == doctest::Approx(0.7 / 25.582).epsilon(1e-9));
    const Oscillator<double> undamped{1.0, 0.0, 4.0, "u"};
    CHECK_THROWS_AS(linear_response(undamped, 4.0, 1.0, 2.0), DynamicsError);
}

TEST_CASE("RK4 convergence order") {
    const auto sys = nonlinear_pair();
    const double periods = 20.0;
    const auto ref = run_pair(sys, 0.025 / 8, periods);
    const auto coarse = run_pair(sys, 0.05, periods);
    const auto fine = run_pair(sys, 0.025, periods);
    const double e1 = (coarse.u - ref.u).norm() + (coarse.v - ref.v).norm();
    const double e2 = (fine.u - ref.u).norm() + (fine.v - ref.v).norm();
    const double order = std::log2(e1 / e2);
    MESSAGE("measured order " << order);
    CHECK(e1 / e2 >= 8.0);
    CHECK(order >= 3.8);
}

TEST_CASE("identical runs are bit-identical") {
    const auto sys = nonlinear_pair();
    const auto a = run_pair(sys, 0.025, 30.0);
    const auto b = run_pair(sys, 0.025, 30.0);
    CHECK(a.u == b.u);
    CHECK(a.v == b.v);
}

TEST_CASE("energy audit of a conservative nonlinear pair") {
    // slow modes relative to the 1-rad/T reference, as for the insulator
    SystemBuilder<double> b;
    b.add_oscillator({1.0, 0.0, 0.04, "a"});
    b.add_oscillator({2.0, 0.0, 0.05, "b"});
    b.add_spring(0, 1, 0.01);
    b.add_cubic(0, 1, 0.02);
    auto sys = b.build();
    Rk4<double> rk(sys, 1.0, 0.025);
    auto s = State<double>::zero(2);
    s.u << 0.3, -0.2;
    const double e0 = sys.energy(s.u, s.v);
    rk.run(s, 4000);
    CHECK(std::abs(sys.energy(s.u, s.v) - e0) / e0 < 1e-6);

    // at the reference frequency itself RK4's own damping dominates
    SystemBuilder<double> h;
    h.add_oscillator({1.0, 0.0, 1.0, "x"});
    auto hs = h.build();
    Rk4<double> rh(hs, 1.0, 0.025);
    auto s1 = State<double>::zero(1);
    s1.u[0] = 1.0;
    rh.run(s1, 4000);
    const double drift = 1.0 - hs.energy(s1.u, s1.v) / 0.5;
    CHECK(drift > 0.0);
    CHECK(drift < 1e-3);
}

TEST_CASE("non-finite state is reported with the oscillator") {
    SystemBuilder<double> b;
    b.add_oscillator({1.0, 0.0, 1.0, "calm"});
    b.add_oscillator({1.0, 0.0, 1.0, "wild"});
    b.add_cubic(1, 0, -50.0);
    auto sys = b.build();
    Rk4<double> rk(sys, 1.0, 0.05);
    auto s = State<double>::zero(2);
    s.u << 0.0, 1e3;
    bool caught = false;
    try {
        rk.run(s, 100000);
    } catch (const IntegrationFault &f) {
        caught = true;
        CHECK(f.time() > 0.0);
        CHECK((f.label() == "calm" || f.label() == "wild"));
    }
    CHECK(caught);
    CHECK_THROWS_AS(Rk4<double>(sys, 1.0, 0.06), DynamicsError);
}

TEST_CASE("trace CSV") {
    Trace<double> a{0, "x", 0.5, 0.5, {1.0, 2.0}};
    Trace<double> b{1, "y", 0.5, 0.5, {3.0, 4.0}};
    std::ostringstream os;
    write_traces_csv(os, {a, b}, 2 * kPi);
    CHECK(os.str().rfind("time,x,y\n", 0) == 0);
    CHECK(os.str().find("0.5,1,3") != std::string::npos);
}
