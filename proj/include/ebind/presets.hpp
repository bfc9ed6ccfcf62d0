#pragma once

#include "ebind/profile.hpp"
#include "ebind/radial.hpp"
#include "ebind/system.hpp"

namespace ebind::presets {

// Two identical particles in d = 3 with shell cutoffs, field-mediated pair term only.
inline ParticleSystem shell_pair_3d(double alpha = 1.0, double ir = 0.5, double uv = 10.0) {
    ParticleSystem s;
    s.d = 3;
    s.masses = {1.0, 1.0};
    s.couplings = {alpha, alpha};
    s.profiles = {CutoffProfile::shell(3, ir, uv), CutoffProfile::shell(3, ir, uv)};
    s.external = {ZeroPotential{}, ZeroPotential{}};
    return s;
}

// Well plus wider barrier: no bound state for one unit-mass particle in d = 1,
// while -Delta/4 + 2V binds.
inline RadialPotential well_with_barrier() { return GaussianSum{{-1.5, 1.0}, {0.8, 2.0}}; }

// n identical unit-mass particles in d = 1 feeling `well_with_barrier`, with the
// pair kernel W(r) = -exp(-r^2/2). Shell profiles supply the field norms.
inline ParticleSystem enhanced_binding_chain(std::size_t n = 2, double alpha = 1.0) {
    ParticleSystem s;
    s.d = 1;
    s.masses.assign(n, 1.0);
    s.couplings.assign(n, alpha);
    s.profiles.assign(n, CutoffProfile::shell(1, 0.5, 2.0, 1.0, ProfileForm::lambda_hat));
    s.external.assign(n, well_with_barrier());
    s.pair_kernel = gaussian_well(1.0, 1.0);
    return s;
}

}  // namespace ebind::presets
