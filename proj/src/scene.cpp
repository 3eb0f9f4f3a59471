#include "fadetwin/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "fadetwin/rng.hpp"

namespace fadetwin {

namespace {

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok, int line_no) {
    size_t pos = 0;
    double v;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
    }
    if (pos != tok.size() || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
    return v;
}

long parse_int(const std::string& tok, int line_no) {
    size_t pos = 0;
    long v;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad integer '" + tok + "'");
    }
    if (pos != tok.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad integer '" + tok + "'");
    return v;
}

}  // namespace

void Scene::validate() const {
    std::set<std::string> names;
    for (const auto& m : materials) {
        if (m.name.empty()) throw SceneError("material with empty name");
        if (!names.insert(m.name).second) throw SceneError("duplicate material '" + m.name + "'");
        if (!(m.eps_r >= 1.0)) throw SceneError("material '" + m.name + "': eps_r < 1");
    }
    for (const auto& w : walls) {
        if (w.material < 0 || w.material >= static_cast<int>(materials.size()))
            throw SceneError("wall references unknown material");
        if (!std::isfinite(w.a.x) || !std::isfinite(w.a.y) || !std::isfinite(w.b.x) || !std::isfinite(w.b.y))
            throw SceneError("wall with non-finite coordinates");
        if (w.a == w.b) throw SceneError("degenerate zero-length wall");
    }
    if (band.n_points < 2) throw SceneError("band needs n_points >= 2");
    if (!(band.f_min < band.f_max)) throw SceneError("band needs f_min < f_max");
    for (const auto& tx : tx_positions) {
        if (tx == rx) throw SceneError("tx coincides with rx");
    }
}

bool operator==(const Scene& lhs, const Scene& rhs) {
    if (lhs.materials.size() != rhs.materials.size() || lhs.walls.size() != rhs.walls.size() ||
        lhs.tx_positions.size() != rhs.tx_positions.size())
        return false;
    for (size_t i = 0; i < lhs.materials.size(); ++i)
        if (lhs.materials[i].name != rhs.materials[i].name || lhs.materials[i].eps_r != rhs.materials[i].eps_r)
            return false;
    for (size_t i = 0; i < lhs.walls.size(); ++i) {
        const auto& a = lhs.walls[i];
        const auto& b = rhs.walls[i];
        if (!(a.a == b.a) || !(a.b == b.b) || lhs.materials[a.material].name != rhs.materials[b.material].name)
            return false;
    }
    if (!(lhs.rx == rhs.rx)) return false;
    for (size_t i = 0; i < lhs.tx_positions.size(); ++i)
        if (!(lhs.tx_positions[i] == rhs.tx_positions[i])) return false;
    return lhs.band.f_min == rhs.band.f_min && lhs.band.f_max == rhs.band.f_max &&
           lhs.band.n_points == rhs.band.n_points;
}

Scene parse_scene(const std::string& text) {
    Scene scene;
    std::map<std::string, int> material_index;
    std::map<int, Vec2> tx_by_id;
    bool saw_rx = false, saw_band = false;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;

        const std::string& kw = tok[0];
        auto want = [&](size_t n) {
            if (tok.size() != n + 1)
                throw ParseError("line " + std::to_string(line_no) + ": '" + kw + "' expects " +
                                 std::to_string(n) + " arguments");
        };
        if (kw == "material") {
            want(2);
            Material m{tok[1], parse_double(tok[2], line_no)};
            if (material_index.count(m.name))
                throw ParseError("line " + std::to_string(line_no) + ": duplicate material '" + m.name + "'");
            if (!(m.eps_r >= 1.0))
                throw ParseError("line " + std::to_string(line_no) + ": eps_r must be >= 1");
            material_index[m.name] = static_cast<int>(scene.materials.size());
            scene.materials.push_back(m);
        } else if (kw == "wall") {
            want(5);
            auto it = material_index.find(tok[5]);
            if (it == material_index.end())
                throw ParseError("line " + std::to_string(line_no) + ": unknown material '" + tok[5] + "'");
            Wall w;
            w.a = {parse_double(tok[1], line_no), parse_double(tok[2], line_no)};
            w.b = {parse_double(tok[3], line_no), parse_double(tok[4], line_no)};
            w.material = it->second;
            scene.walls.push_back(w);
        } else if (kw == "rx") {
            want(2);
            scene.rx = {parse_double(tok[1], line_no), parse_double(tok[2], line_no)};
            saw_rx = true;
        } else if (kw == "tx") {
            want(3);
            int id = static_cast<int>(parse_int(tok[1], line_no));
            if (tx_by_id.count(id))
                throw ParseError("line " + std::to_string(line_no) + ": duplicate tx id " + std::to_string(id));
            tx_by_id[id] = {parse_double(tok[2], line_no), parse_double(tok[3], line_no)};
        } else if (kw == "band") {
            want(3);
            scene.band.f_min = parse_double(tok[1], line_no);
            scene.band.f_max = parse_double(tok[2], line_no);
            scene.band.n_points = static_cast<int>(parse_int(tok[3], line_no));
            saw_band = true;
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": unknown directive '" + kw + "'");
        }
    }
    if (!saw_rx) throw ParseError("missing rx directive");
    if (!saw_band) throw ParseError("missing band directive");
    if (tx_by_id.empty()) throw ParseError("missing tx directives");

    int next = 0;
    for (const auto& [id, pos] : tx_by_id) {
        if (id != next)
            throw ParseError("tx ids must be contiguous 0..N-1, missing id " + std::to_string(next));
        scene.tx_positions.push_back(pos);
        ++next;
    }
    scene.validate();
    return scene;
}

std::string serialize_scene(const Scene& scene) {
    std::ostringstream out;
    for (const auto& m : scene.materials)
        out << "material " << m.name << ' ' << fmt_double(m.eps_r) << '\n';
    for (const auto& w : scene.walls)
        out << "wall " << fmt_double(w.a.x) << ' ' << fmt_double(w.a.y) << ' ' << fmt_double(w.b.x) << ' '
            << fmt_double(w.b.y) << ' ' << scene.materials[w.material].name << '\n';
    out << "rx " << fmt_double(scene.rx.x) << ' ' << fmt_double(scene.rx.y) << '\n';
    for (size_t i = 0; i < scene.tx_positions.size(); ++i)
        out << "tx " << i << ' ' << fmt_double(scene.tx_positions[i].x) << ' '
            << fmt_double(scene.tx_positions[i].y) << '\n';
    out << "band " << fmt_double(scene.band.f_min) << ' ' << fmt_double(scene.band.f_max) << ' '
        << scene.band.n_points << '\n';
    return out.str();
}

TwinPair generate_twin_pair(const Scene& base, const PerturbationSpec& spec, std::uint64_t seed) {
    if (!(spec.eps_lo <= spec.eps_hi) || spec.eps_lo < 1.0)
        throw SceneError("empty or invalid eps_r perturbation range");
    if (spec.clutter_count < 0) throw SceneError("negative clutter count");

    TwinPair pair;
    pair.perturbation_seed = seed;

    // Twin: identical base geometry, every material replaced by default brick.
    pair.twin = base;
    pair.twin.materials = {{"itu_brick", kBrickEpsR}};
    for (auto& w : pair.twin.walls) w.material = 0;

    // Truth: per-wall permittivity plus clutter.
    Rng rng(mix_seed(seed, "twin_pair"));
    pair.truth = base;
    pair.truth.materials.clear();
    for (size_t i = 0; i < pair.truth.walls.size(); ++i) {
        double eps = spec.eps_lo == spec.eps_hi ? spec.eps_lo : rng.uniform(spec.eps_lo, spec.eps_hi);
        pair.truth.materials.push_back({"truth_" + std::to_string(i), eps});
        pair.truth.walls[i].material = static_cast<int>(i);
    }

    Vec2 lo = spec.bbox_lo, hi = spec.bbox_hi;
    if (!(lo.x < hi.x && lo.y < hi.y)) {
        // Derive the box from scene extents (walls, rx, tx).
        lo = hi = base.rx;
        auto grow = [&](Vec2 p) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
        };
        for (const auto& w : base.walls) {
            grow(w.a);
            grow(w.b);
        }
        for (const auto& tx : base.tx_positions) grow(tx);
    }

    const double kClearance = 0.5;
    for (int k = 0; k < spec.clutter_count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            Vec2 center{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
            double len = rng.uniform(spec.clutter_len_lo, spec.clutter_len_hi);
            double ang = rng.uniform(0.0, 6.283185307179586477);
            Vec2 half = 0.5 * len * Vec2{std::cos(ang), std::sin(ang)};
            Vec2 a = center - half, b = center + half;
            if (point_segment_distance(base.rx, a, b) < kClearance) continue;
            bool clear = true;
            for (const auto& tx : base.tx_positions) {
                if (point_segment_distance(tx, a, b) < kClearance) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;
            double eps = spec.eps_lo == spec.eps_hi ? spec.eps_lo : rng.uniform(spec.eps_lo, spec.eps_hi);
            pair.truth.materials.push_back({"clutter_" + std::to_string(k), eps});
            pair.truth.walls.push_back({a, b, static_cast<int>(pair.truth.materials.size()) - 1});
            placed = true;
        }
        if (!placed) throw SceneError("infeasible clutter placement after 1000 rejections");
    }

    pair.truth.validate();
    pair.twin.validate();
    return pair;
}

Scene synthetic_campus(std::uint64_t seed) {
    Rng rng(mix_seed(seed, "campus"));
    Scene scene;
    scene.materials = {{"itu_brick", kBrickEpsR}};
    scene.rx = {100.0, 100.0};
    scene.band = {2e9, 10e9, 8001};

    struct Rect {
        double x0, y0, x1, y1;
        bool contains(Vec2 p, double margin) const {
            return p.x > x0 - margin && p.x < x1 + margin && p.y > y0 - margin && p.y < y1 + margin;
        }
        bool overlaps(const Rect& o, double gap) const {
            return x0 - gap < o.x1 && o.x0 - gap < x1 && y0 - gap < o.y1 && o.y0 - gap < y1;
        }
    };

    int n_buildings = 4 + static_cast<int>(rng.uniform_index(5));
    std::vector<Rect> rects;
    for (int b = 0; b < n_buildings; ++b) {
        for (int attempt = 0; attempt < 500; ++attempt) {
            double w = rng.uniform(30.0, 65.0);
            double h = rng.uniform(30.0, 65.0);
            double x0 = rng.uniform(10.0, 190.0 - w);
            double y0 = rng.uniform(10.0, 190.0 - h);
            Rect r{x0, y0, x0 + w, y0 + h};
            if (r.contains(scene.rx, 8.0)) continue;
            bool ok = true;
            for (const auto& o : rects)
                if (r.overlaps(o, 6.0)) ok = false;
            if (!ok) continue;
            rects.push_back(r);
            break;
        }
    }
    for (const auto& r : rects) {
        int m = 0;
        scene.walls.push_back({{r.x0, r.y0}, {r.x1, r.y0}, m});
        scene.walls.push_back({{r.x1, r.y0}, {r.x1, r.y1}, m});
        scene.walls.push_back({{r.x1, r.y1}, {r.x0, r.y1}, m});
        scene.walls.push_back({{r.x0, r.y1}, {r.x0, r.y0}, m});
    }

    // Serpentine grid of tx candidates; keep the first 127 outside buildings.
    const int kGrid = 16;
    const double lo = 8.0, hi = 192.0;
    const double step = (hi - lo) / (kGrid - 1);
    for (int row = 0; row < kGrid && scene.tx_positions.size() < 127; ++row) {
        for (int col = 0; col < kGrid && scene.tx_positions.size() < 127; ++col) {
            int c = (row % 2 == 0) ? col : kGrid - 1 - col;
            Vec2 p{lo + c * step, lo + row * step};
            bool inside = false;
            for (const auto& r : rects)
                if (r.contains(p, 1.0)) inside = true;
            if (inside || dist(p, scene.rx) < 1.0) continue;
            scene.tx_positions.push_back(p);
        }
    }
    scene.validate();
    return scene;
}

}  // namespace fadetwin
