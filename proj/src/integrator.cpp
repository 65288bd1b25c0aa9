#include "nhrch/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace nhrch {

void IntegrationConfig::validate() const {
    if (!(step > 0)) throw ConfigError("integration step must be positive");
    if (!(t_end > 0)) throw ConfigError("integration end time must be positive");
    if (!(drift_limit > 0)) throw ConfigError("drift limit must be positive");
}

double Trajectory::max_energy_drift() const {
    double out = 0.0;
    for (double e : energy) out = std::max(out, std::abs(e - energy.front()));
    return out;
}

double Trajectory::max_constraint() const {
    double out = 0.0;
    for (double c : constraint) out = std::max(out, c);
    return out;
}

StepOffManifold::StepOffManifold(double time, double residual, Trajectory partial)
    : Error("trajectory left the constraint set at t=" + std::to_string(time) + " (residual " +
            std::to_string(residual) + ")"),
      time_(time), residual_(residual), partial_(std::move(partial)) {}

IntegrationAborted::IntegrationAborted(double time, const std::string& cause, Trajectory partial)
    : Error("integration aborted at t=" + std::to_string(time) + ": " + cause), time_(time), partial_(std::move(partial)) {}

namespace {

PhasePoint advance(const PhasePoint& z, const TangentVec& k, double h) { return {z.q + h * k.dq, z.p + h * k.dp}; }

}  // namespace

Trajectory integrate(const DistributionalSystem& system, const PhasePoint& z0, const IntegrationConfig& cfg) {
    cfg.validate();
    const double r0 = system.membership_residual(z0);
    if (!(r0 <= kOnManifoldTol)) throw PreconditionError("initial state on the constraint set", r0);
    const ChartSpec& chart = system.chart();
    // Whole steps of size h, with a shorter final step landing exactly on t_end.
    long steps = static_cast<long>(std::floor(cfg.t_end / cfg.step));
    if (cfg.t_end - static_cast<double>(steps) * cfg.step > 1e-12 * cfg.t_end) ++steps;
    Trajectory traj;
    auto record = [&](double t, const PhasePoint& z, double resid) {
        traj.times.push_back(t);
        traj.states.push_back(z);
        if (cfg.monitor_energy) traj.energy.push_back(system.hamiltonian(z));
        if (cfg.monitor_constraint) traj.constraint.push_back(resid);
        if (!cfg.momentum_indices.empty()) {
            Vec m(static_cast<long>(cfg.momentum_indices.size()));
            for (std::size_t i = 0; i < cfg.momentum_indices.size(); ++i)
                m[static_cast<long>(i)] = z.p[static_cast<long>(cfg.momentum_indices[i])];
            traj.momentum.push_back(m);
        }
    };
    PhasePoint z{chart.wrap(z0.q), z0.p};
    record(0.0, z, r0);
    for (long i = 1; i <= steps; ++i) {
        const double t = i == steps ? cfg.t_end : static_cast<double>(i) * cfg.step;
        const double h = t - traj.times.back();
        PhasePoint next;
        try {
            const TangentVec k1 = system.x_tilde(z);
            const TangentVec k2 = system.x_tilde(advance(z, k1, 0.5 * h));
            const TangentVec k3 = system.x_tilde(advance(z, k2, 0.5 * h));
            const TangentVec k4 = system.x_tilde(advance(z, k3, h));
            next = {z.q + (h / 6.0) * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq),
                    z.p + (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp)};
            if (cfg.projection == Projection::per_step) next = system.project_to_constraint(next);
        } catch (const Error& e) {
            const double t_fail = traj.times.back();
            throw IntegrationAborted(t_fail, e.what(), std::move(traj));
        }
        next.q = chart.wrap(next.q);
        const double resid = system.membership_residual(next);
        if (!(resid <= cfg.drift_limit)) throw StepOffManifold(t, resid, std::move(traj));
        z = next;
        record(t, z, resid);
    }
    return traj;
}

}  // namespace nhrch
