#include "fadetwin/raytwin.hpp"

#include <algorithm>
#include <cmath>

namespace fadetwin {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEdgeEps = 1e-9;

struct TraceContext {
    const Scene& scene;
    Vec2 rx;
    double lambda_c;
    std::vector<PathComponent>* out;
};

// True when the open segment p->q is crossed by any wall other than the
// reflecting walls at its endpoints.
bool blocked(const Scene& scene, Vec2 p, Vec2 q, int skip_p, int skip_q) {
    for (size_t k = 0; k < scene.walls.size(); ++k) {
        if (static_cast<int>(k) == skip_p || static_cast<int>(k) == skip_q) continue;
        const Wall& w = scene.walls[k];
        auto hit = segment_intersection(p, q, w.a, w.b);
        if (!hit) continue;
        if (hit->t > kEdgeEps && hit->t < 1.0 - kEdgeEps && hit->u > -kEdgeEps && hit->u < 1.0 + kEdgeEps)
            return true;
    }
    return false;
}

// Validate one mirror-image wall sequence and emit the path if it exists.
void try_sequence(const TraceContext& ctx, const std::vector<int>& seq, const std::vector<Vec2>& images) {
    const Scene& scene = ctx.scene;
    const int m = static_cast<int>(seq.size());

    // Backtrack reflection points from the receiver side.
    std::vector<Vec2> points(static_cast<size_t>(m) + 2);
    points.back() = ctx.rx;
    Vec2 target = ctx.rx;
    for (int j = m; j >= 1; --j) {
        const Wall& w = scene.walls[static_cast<size_t>(seq[static_cast<size_t>(j - 1)])];
        auto hit = segment_intersection(images[static_cast<size_t>(j)], target, w.a, w.b);
        if (!hit) return;
        if (hit->t <= kEdgeEps || hit->t >= 1.0 - kEdgeEps) return;
        if (hit->u <= kEdgeEps || hit->u >= 1.0 - kEdgeEps) return;
        Vec2 p = w.a + hit->u * (w.b - w.a);
        points[static_cast<size_t>(j)] = p;
        target = p;
    }
    points[0] = images[0];  // tx

    // Occlusion per leg, skipping the reflecting walls at the leg endpoints.
    for (int j = 0; j <= m; ++j) {
        int skip_p = (j == 0) ? -1 : seq[static_cast<size_t>(j - 1)];
        int skip_q = (j == m) ? -1 : seq[static_cast<size_t>(j)];
        if (blocked(scene, points[static_cast<size_t>(j)], points[static_cast<size_t>(j + 1)], skip_p, skip_q))
            return;
    }

    double length = 0.0;
    for (int j = 0; j <= m; ++j) length += dist(points[static_cast<size_t>(j)], points[static_cast<size_t>(j + 1)]);
    if (length <= 0.0) return;

    double gain = ctx.lambda_c / (4.0 * kPi * length);
    for (int j = 1; j <= m; ++j) {
        const Wall& w = scene.walls[static_cast<size_t>(seq[static_cast<size_t>(j - 1)])];
        Vec2 n = segment_normal(w.a, w.b);
        Vec2 d = normalized(points[static_cast<size_t>(j)] - points[static_cast<size_t>(j - 1)]);
        double cos_theta = std::abs(dot(d, n));
        gain *= fresnel_reflection(cos_theta, scene.wall_material(w).eps_r);
    }

    PathComponent pc;
    pc.amplitude = gain;
    pc.delay = length / kSpeedOfLight;
    pc.departure_dir = normalized(points[1] - points[0]);
    pc.order = m;
    ctx.out->push_back(pc);
}

void enumerate_sequences(const TraceContext& ctx, std::vector<int>& seq, std::vector<Vec2>& images, int max_order) {
    const int depth = static_cast<int>(seq.size());
    if (depth > 0) try_sequence(ctx, seq, images);
    if (depth == max_order) return;
    for (size_t k = 0; k < ctx.scene.walls.size(); ++k) {
        if (depth > 0 && seq.back() == static_cast<int>(k)) continue;
        const Wall& w = ctx.scene.walls[k];
        seq.push_back(static_cast<int>(k));
        images.push_back(mirror_point(images.back(), w.a, w.b));
        enumerate_sequences(ctx, seq, images, max_order);
        images.pop_back();
        seq.pop_back();
    }
}

}  // namespace

double fresnel_reflection(double cos_theta, double eps_r) {
    double sin2 = 1.0 - cos_theta * cos_theta;
    double root = std::sqrt(std::max(0.0, eps_r - sin2));
    return (cos_theta - root) / (cos_theta + root);
}

PathSet trace(const Scene& scene, Vec2 tx, int max_order) {
    if (max_order < 0 || max_order > 3) throw SceneError("max_order must be in [0, 3]");
    if (tx == scene.rx) throw SceneError("tx coincides with rx");

    PathSet ps;
    ps.tx = tx;
    ps.max_order = max_order;
    double lambda_c = kSpeedOfLight / scene.band.center();

    if (!blocked(scene, tx, scene.rx, -1, -1)) {
        double d = dist(tx, scene.rx);
        PathComponent los;
        los.amplitude = lambda_c / (4.0 * kPi * d);
        los.delay = d / kSpeedOfLight;
        los.departure_dir = normalized(scene.rx - tx);
        los.order = 0;
        ps.paths.push_back(los);
    }

    TraceContext ctx{scene, scene.rx, lambda_c, &ps.paths};
    std::vector<int> seq;
    std::vector<Vec2> images{tx};
    enumerate_sequences(ctx, seq, images, max_order);

    std::sort(ps.paths.begin(), ps.paths.end(),
              [](const PathComponent& a, const PathComponent& b) { return a.delay < b.delay; });
    // Drop duplicates from degenerate collinear geometry.
    auto last = std::unique(ps.paths.begin(), ps.paths.end(), [](const PathComponent& a, const PathComponent& b) {
        return std::abs(a.delay - b.delay) < 1e-15 && std::abs(a.amplitude - b.amplitude) < 1e-18;
    });
    ps.paths.erase(last, ps.paths.end());
    return ps;
}

std::vector<std::complex<double>> transfer_function(const PathSet& ps, std::span<const double> freqs) {
    std::vector<std::complex<double>> h(freqs.size(), {0.0, 0.0});
    for (const auto& p : ps.paths) {
        for (size_t i = 0; i < freqs.size(); ++i)
            h[i] += p.amplitude * std::polar(1.0, -2.0 * kPi * freqs[i] * p.delay);
    }
    return h;
}

std::vector<double> power_samples(const Scene& scene, Vec2 tx, int max_order) {
    PathSet ps = trace(scene, tx, max_order);
    const int n = scene.band.n_points;
    std::vector<double> freqs(static_cast<size_t>(n));
    double df = (scene.band.f_max - scene.band.f_min) / (n - 1);
    for (int k = 0; k < n; ++k) freqs[static_cast<size_t>(k)] = scene.band.f_min + k * df;
    auto h = transfer_function(ps, freqs);
    std::vector<double> power(h.size());
    for (size_t i = 0; i < h.size(); ++i) power[i] = std::norm(h[i]);
    return power;
}

std::vector<double> local_grid_power(const Scene& scene, Vec2 tx, int grid_n, double spacing, int max_order) {
    int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(grid_n))));
    if (g * g != grid_n) throw SceneError("grid_n must be a perfect square");
    double lambda_c = kSpeedOfLight / scene.band.center();
    if (spacing <= 0.0) spacing = lambda_c;
    const double fc = scene.band.center();

    std::vector<double> power;
    power.reserve(static_cast<size_t>(grid_n));
    const double half = 0.5 * (g - 1);
    for (int iy = 0; iy < g; ++iy) {
        for (int ix = 0; ix < g; ++ix) {
            Vec2 p{tx.x + (ix - half) * spacing, tx.y + (iy - half) * spacing};
            PathSet ps = trace(scene, p, max_order);
            std::complex<double> h{0.0, 0.0};
            for (const auto& pc : ps.paths) h += pc.amplitude * std::polar(1.0, -2.0 * kPi * fc * pc.delay);
            power.push_back(std::norm(h));
        }
    }
    return power;
}

}  // namespace fadetwin
