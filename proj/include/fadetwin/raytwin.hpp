#pragma once

#include <complex>
#include <span>
#include <vector>

#include "fadetwin/scene.hpp"

namespace fadetwin {

constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct PathComponent {
    std::complex<double> amplitude;  // field gain, dimensionless
    double delay = 0.0;              // seconds
    Vec2 departure_dir;              // unit vector at the transmitter
    int order = 0;                   // reflection count
};

struct PathSet {
    Vec2 tx;
    std::vector<PathComponent> paths;  // sorted by increasing delay
    int max_order = 0;
};

// Fresnel reflection coefficient, perpendicular (TE) polarization.
// cos_theta is the cosine of the incidence angle measured from the normal.
double fresnel_reflection(double cos_theta, double eps_r);

// 2D image-method trace from tx to scene.rx with specular reflections up
// to max_order bounces. Walls are opaque; blocked paths are dropped.
PathSet trace(const Scene& scene, Vec2 tx, int max_order);

// h(f) = sum_n alpha_n e^{-i 2 pi f tau_n}
std::vector<std::complex<double>> transfer_function(const PathSet& ps, std::span<const double> freqs);

// |h(f_k)|^2 on the scene's carrier band grid (n_points equispaced).
std::vector<double> power_samples(const Scene& scene, Vec2 tx, int max_order);

// |h(f_center)|^2 over a centered grid_n-point square grid of small tx
// displacements. spacing <= 0 selects the default of one carrier wavelength,
// small enough to stay local yet wide enough to decorrelate the multipath
// phases across the grid.
std::vector<double> local_grid_power(const Scene& scene, Vec2 tx, int grid_n, double spacing, int max_order);

}  // namespace fadetwin
