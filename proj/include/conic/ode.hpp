#pragma once
// Adaptive Dormand-Prince 5(4) integration with dense-output event location.

#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

namespace conic::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Options {
    double rtol = 1e-10;
    double atol = 1e-10;
    double initial_step = 1e-3;
    std::size_t max_steps = 2000000;
};

enum class Stop { end, event, underflow, max_steps };

/// Root of g(s, y) in the given direction (+1 rising, -1 falling, 0 either) stops the run.
template <std::size_t N>
struct Event {
    std::function<double(double, const State<N>&)> g;
    int direction = 0;
};

template <std::size_t N>
struct Result {
    std::vector<double> s;
    std::vector<State<N>> y;
    Stop stop = Stop::end;
    int event = -1;
};

/// Integrates y' = f(s, y) from s0 towards s1 (either direction). Accepted
/// steps are recorded; an event root is located on the dense output and
/// appended as the final sample.
template <std::size_t N, class Rhs>
Result<N> integrate(Rhs&& f, State<N> y0, double s0, double s1, const Options& opt,
                    const std::vector<Event<N>>& events = {}) {
    namespace odeint = boost::numeric::odeint;
    const double dir = s1 >= s0 ? 1.0 : -1.0;
    // Backward runs use the reflected parameter r = dir * s so the stepper always advances.
    auto sys = [&](const State<N>& y, State<N>& dy, double r) {
        f(dir * r, y, dy);
        if (dir < 0)
            for (auto& v : dy) v = -v;
    };
    auto stepper = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State<N>>());
    const double r0 = dir * s0, r1 = dir * s1;
    Result<N> out;
    out.s.push_back(s0);
    out.y.push_back(y0);
    if (r1 == r0) return out;
    stepper.initialize(y0, r0, std::min(opt.initial_step, r1 - r0));

    std::vector<double> gprev(events.size());
    for (std::size_t k = 0; k < events.size(); ++k) gprev[k] = events[k].g(s0, y0);

    State<N> tmp;
    for (std::size_t step = 0; step < opt.max_steps; ++step) {
        std::pair<double, double> iv;
        try {
            iv = stepper.do_step(sys);
        } catch (const odeint::odeint_error&) {
            out.stop = Stop::underflow;
            return out;
        }
        const double ra = iv.first;
        double rb = iv.second;
        bool clipped = false;
        if (rb > r1) {
            rb = r1;
            clipped = true;
        }
        if (!(rb - ra > 1e-15 * (1.0 + std::abs(ra)))) {
            out.stop = Stop::underflow;
            return out;
        }
        stepper.calc_state(rb, tmp);
        // Earliest event root inside [ra, rb].
        int hit = -1;
        double rhit = rb;
        for (std::size_t k = 0; k < events.size(); ++k) {
            const double gb = events[k].g(dir * rb, tmp);
            const double ga = gprev[k];
            const bool rising = ga < 0 && gb >= 0, falling = ga > 0 && gb <= 0;
            const bool fire = (events[k].direction >= 0 && rising) || (events[k].direction <= 0 && falling);
            if (fire) {
                State<N> ys;
                auto gfun = [&](double r) {
                    stepper.calc_state(r, ys);
                    return events[k].g(dir * r, ys);
                };
                double lo = ra, hi = rb;
                if (ga != 0.0) {
                    boost::uintmax_t it = 200;
                    auto tolf = [](double a, double b) { return std::abs(b - a) <= 4e-16 * (1.0 + std::abs(a)); };
                    auto r = boost::math::tools::toms748_solve(gfun, lo, hi, ga, gb, tolf, it);
                    lo = r.first;
                    hi = r.second;
                }
                const double root = ga == 0.0 ? ra : 0.5 * (lo + hi);
                if (root < rhit || hit < 0) {
                    rhit = root;
                    hit = static_cast<int>(k);
                }
            }
            gprev[k] = gb;
        }
        if (hit >= 0) {
            stepper.calc_state(rhit, tmp);
            out.s.push_back(dir * rhit);
            out.y.push_back(tmp);
            out.stop = Stop::event;
            out.event = hit;
            return out;
        }
        out.s.push_back(dir * rb);
        out.y.push_back(tmp);
        if (clipped || rb >= r1) {
            out.stop = Stop::end;
            return out;
        }
    }
    out.stop = Stop::max_steps;
    return out;
}

}  // namespace conic::ode
