#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fadetwin/geometry.hpp"

namespace fadetwin {

struct SceneError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : SceneError {
    using SceneError::SceneError;
};

struct Material {
    std::string name;
    double eps_r = 1.0;  // relative permittivity, >= 1
};

struct Wall {
    Vec2 a, b;
    int material = 0;  // index into Scene::materials
};

struct Band {
    double f_min = 0.0;  // Hz
    double f_max = 0.0;  // Hz
    int n_points = 0;
    double center() const { return 0.5 * (f_min + f_max); }
};

struct Scene {
    std::vector<Material> materials;
    std::vector<Wall> walls;
    Vec2 rx;
    std::vector<Vec2> tx_positions;  // index == tx id
    Band band;

    const Material& wall_material(const Wall& w) const { return materials[static_cast<size_t>(w.material)]; }

    // Throws SceneError when an invariant is violated.
    void validate() const;
};

bool operator==(const Scene& lhs, const Scene& rhs);

struct PerturbationSpec {
    double eps_lo = 2.0;
    double eps_hi = 8.0;
    int clutter_count = 2;
    double clutter_len_lo = 2.0;
    double clutter_len_hi = 10.0;
    // Clutter bounding box; left inverted means "derive from scene extents".
    Vec2 bbox_lo{0.0, 0.0};
    Vec2 bbox_hi{-1.0, -1.0};
};

struct TwinPair {
    Scene truth;  // perturbed materials + clutter walls
    Scene twin;   // same base geometry, everything brick
    std::uint64_t perturbation_seed = 0;
};

constexpr double kBrickEpsR = 3.91;

Scene parse_scene(const std::string& text);
std::string serialize_scene(const Scene& scene);

TwinPair generate_twin_pair(const Scene& base, const PerturbationSpec& spec, std::uint64_t seed);

// Built-in campus-like scene: rectangular buildings, one rx, a serpentine
// grid of 127 tx positions, 2-10 GHz band with 8001 points.
Scene synthetic_campus(std::uint64_t seed);

}  // namespace fadetwin
