#ifndef NHRCH_INTEGRATOR_HPP
#define NHRCH_INTEGRATOR_HPP

#include "nhrch/constraints.hpp"

namespace nhrch {

enum class Projection { none, per_step };

struct IntegrationConfig {
    double step = 1e-3;
    double t_end = 1.0;
    Projection projection = Projection::none;
    bool monitor_energy = true;
    bool monitor_constraint = true;
    // Momentum components p_i recorded each step (empty: no momentum monitor).
    std::vector<std::size_t> momentum_indices;
    double drift_limit = 1e-4;

    void validate() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PhasePoint> states;
    std::vector<double> energy;
    std::vector<double> constraint;
    std::vector<Vec> momentum;

    double max_energy_drift() const;
    double max_constraint() const;
};

class StepOffManifold : public Error {
public:
    StepOffManifold(double time, double residual, Trajectory partial);
    double time() const { return time_; }
    double residual() const { return residual_; }
    const Trajectory& partial() const { return partial_; }

private:
    double time_;
    double residual_;
    Trajectory partial_;
};

// A vector-field evaluation failed mid-run; carries the states computed so far.
class IntegrationAborted : public Error {
public:
    IntegrationAborted(double time, const std::string& cause, Trajectory partial);
    double time() const { return time_; }
    const Trajectory& partial() const { return partial_; }

private:
    double time_;
    Trajectory partial_;
};

// Classical fixed-step RK4 of z' = X~(z). Periodic coordinates are wrapped after each step.
Trajectory integrate(const DistributionalSystem& system, const PhasePoint& z0, const IntegrationConfig& cfg);

}  // namespace nhrch

#endif
