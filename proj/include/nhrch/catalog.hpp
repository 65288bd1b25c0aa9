#ifndef NHRCH_CATALOG_HPP
#define NHRCH_CATALOG_HPP

#include <json.hpp>

#include "nhrch/hamilton_jacobi.hpp"
#include "nhrch/reduction.hpp"

namespace nhrch::catalog {

using Params = nlohmann::json;

struct SystemEntry {
    std::string name;
    std::string description;
    Params defaults;
    bool reduction_supported = true;
};

const std::vector<SystemEntry>& entries();
NonholonomicRCHSpec make_system(const std::string& name, const Params& params = Params::object());
// Symmetry group the catalog declares for a system (empty translations if none).
SymmetrySpec declared_symmetry(const std::string& name, const ChartSpec& chart);

// Chart (x, y), M = m I, V = 0, D = TQ.
NonholonomicRCHSpec free_particle_2d(double mass = 1.0);
// Chart (x, y, theta), M = diag(m, m, I), D = span{cos theta dx + sin theta dy, d theta}.
NonholonomicRCHSpec knife_edge(double mass = 1.0, double inertia = 1.0);
// Chart (x, y, theta, phi); rolling without slipping: xdot = R cos theta phidot, ydot = R sin theta phidot.
NonholonomicRCHSpec vertical_rolling_disk(double mass = 1.0, double radius = 1.0, double inertia_theta = 0.25,
                                          double inertia_phi = 0.5);
// Chart (x, y, theta) of the contact point; centre of mass offset along the blade.
NonholonomicRCHSpec chaplygin_sleigh(double mass = 1.0, double inertia = 0.5, double offset = 0.5);
// Chart (x, y, z) with the involutive distribution span{dx, dy}.
NonholonomicRCHSpec planar_slider();

SymmetrySpec translations(const ChartSpec& chart, const std::vector<std::string>& names);
SymmetrySpec se2(const ChartSpec& chart);

ScalarFn potential(const Params& p, const ChartSpec& chart);
VerticalFieldSpec vertical_field(const Params& p, const ChartSpec& chart);
VectorFn spanning_field(const Params& p, const ChartSpec& chart);
MatrixFn mass_matrix(const Params& p, const ChartSpec& chart);
OneFormField one_form(const Params& p, const NonholonomicRCHSpec& spec);
SymplecticMapSpec symplectic_map(const Params& p, const NonholonomicRCHSpec& spec, const SymmetrySpec& G);

// Parameter access with ConfigError on type mismatch.
double number(const Params& p, const char* key, double fallback);
Vec vector(const Params& p, const char* key, long expected_size);

}  // namespace nhrch::catalog

#endif
