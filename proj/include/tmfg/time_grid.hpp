#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tmfg/grid.hpp"

namespace tmfg {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_finite(const ScalarField& f, const char* where, double time) {
    for (int i = 0; i < f.nx; ++i)
        for (int j = 0; j < f.nx; ++j)
            if (!std::isfinite(f(i, j)))
                throw SolverError(std::string(where) + ": non-finite value at node (" +
                                  std::to_string(i) + "," + std::to_string(j) + "), t=" +
                                  format_g17(time));
}

}  // namespace detail

// Uniform time levels t[theta] = theta * tau covering [0, T]; the last level
// lands on T up to rounding of T/tau.
struct TimeGrid {
    int n_t = 1;
    double tau = 0.0;
    int stride = 1;

    double t(int theta) const { return theta * tau; }
    double horizon() const { return (n_t - 1) * tau; }
    bool is_checkpoint(int theta) const { return theta % stride == 0 || theta == n_t - 1; }

    static TimeGrid make(double T, double tau, int stride = 1) {
        if (!(tau > 0.0)) throw std::invalid_argument("TimeGrid: tau must be positive");
        if (stride < 1) throw std::invalid_argument("TimeGrid: stride must be at least 1");
        TimeGrid tg;
        tg.tau = tau;
        tg.stride = stride;
        int steps = 0;
        if (T > 0.0) steps = std::max(1, static_cast<int>(std::llround(T / tau)));
        tg.n_t = steps + 1;
        return tg;
    }
};

// Time-ordered sequence of field snapshots. Lookup between snapshots is
// sample-and-hold: the nearest stored time at or before the query.
template <class FieldT>
class TrajectoryStore {
public:
    void record(int theta, double time, FieldT snap) {
        thetas_.push_back(theta);
        times_.push_back(time);
        snaps_.push_back(std::move(snap));
    }

    // Snapshots may be recorded in reverse (backward sweeps); call this once
    // after recording to restore ascending time order.
    void finalize_ascending() {
        if (times_.size() < 2 || times_.front() <= times_.back()) return;
        std::reverse(thetas_.begin(), thetas_.end());
        std::reverse(times_.begin(), times_.end());
        std::reverse(snaps_.begin(), snaps_.end());
    }

    std::size_t size() const { return snaps_.size(); }
    bool empty() const { return snaps_.empty(); }
    int theta(std::size_t idx) const { return thetas_[idx]; }
    double time(std::size_t idx) const { return times_[idx]; }
    const FieldT& snapshot(std::size_t idx) const { return snaps_[idx]; }
    FieldT& snapshot(std::size_t idx) { return snaps_[idx]; }
    double first_time() const { return times_.front(); }
    double last_time() const { return times_.back(); }

    std::size_t index_at_or_before(double t) const {
        if (empty()) throw SolverError("TrajectoryStore: empty trajectory");
        const double tol = 1e-12 * (1.0 + std::abs(t));
        auto it = std::upper_bound(times_.begin(), times_.end(), t + tol);
        if (it == times_.begin())
            throw SolverError("TrajectoryStore: query before first stored time");
        return std::size_t(it - times_.begin()) - 1;
    }

    const FieldT& at_or_before(double t) const { return snaps_[index_at_or_before(t)]; }

private:
    std::vector<int> thetas_;
    std::vector<double> times_;
    std::vector<FieldT> snaps_;
};

// One strong-stability-preserving RK2 (Heun) step. The same kernel drives the
// forward kinetic solve and the time-reversed backward value solve; the rhs
// callback receives the stage index (0 at the step start, 1 at the step end).
template <class Rhs>
ScalarField ssp_rk2_step(const ScalarField& y, double tau, Rhs&& rhs) {
    const ScalarField k1 = rhs(y, 0);
    ScalarField y1(y.nx, 0.0, y.time_tag);
    for (std::size_t n = 0; n < y.v.size(); ++n) y1.v[n] = y.v[n] + tau * k1.v[n];
    const ScalarField k2 = rhs(y1, 1);
    ScalarField out(y.nx, 0.0, y.time_tag);
    for (std::size_t n = 0; n < y.v.size(); ++n)
        out.v[n] = 0.5 * y.v[n] + 0.5 * (y1.v[n] + tau * k2.v[n]);
    return out;
}

}  // namespace tmfg
