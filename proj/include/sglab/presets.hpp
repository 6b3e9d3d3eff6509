#pragma once

#include <string>
#include <vector>

#include "sglab/torus.hpp"

namespace sglab::presets {

/// rho = 1.
TorusField uniform(TorusGrid g);
/// rho = 1 + 0.3 cos(2 pi x1) cos(2 pi x2); bounds [0.7, 1.3].
TorusField perturbed(TorusGrid g);
/// Two smoothed periodic Gaussian bumps rescaled to min 0.5, max 2, unit mass.
TorusField two_bump(TorusGrid g);
/// rho = 1 + 0.2 cos(2 pi x1) + 0.1 sin(4 pi x2) + 0.1 cos(2 pi (x1 + x2));
/// a density whose flow is not a steady state.
TorusField sheared(TorusGrid g);

/// Manufactured potential q = a cos(2 pi x1) cos(2 pi x2).
TorusField manufactured_q(TorusGrid g, double amplitude);
/// Analytic det D^2 (|x|^2/2 + a cos cos) at the cell centers.
TorusField manufactured_density(TorusGrid g, double amplitude);

/// Density by name: uniform | perturbed | two_bump | sheared.
TorusField density(const std::string& name, TorusGrid g);
/// Nominal [lambda, Lambda] for a named density.
std::pair<double, double> density_bounds(const std::string& name);
std::vector<std::string> density_names();

}  // namespace sglab::presets
