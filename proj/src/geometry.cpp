#include "prefnav/geometry.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "prefnav/errors.hpp"

namespace prefnav {

namespace {

constexpr double kEssentialTol = 1e-9;
// Flipped cells must admit a point this far inside every row.
constexpr double kInteriorMargin = 1e-7;

std::string describe(const HalfPlane& h) {
    std::ostringstream os;
    os << "(" << h.normal.x << ", " << h.normal.y << ")·x <= " << h.offset;
    return os.str();
}

bool same_line(const HalfPlane& a, const HalfPlane& b) {
    const double na = norm(a.normal);
    const double nb = norm(b.normal);
    if (std::abs(cross(a.normal, b.normal)) > 1e-12 * na * nb) return false;
    const double s = dot(a.normal, b.normal) > 0 ? 1.0 : -1.0;
    return std::abs(a.offset / na - s * b.offset / nb) < 1e-9;
}

std::vector<LinearConstraint> rows_of(const ObstaclePolytope& obstacle) {
    std::vector<LinearConstraint> rows;
    rows.reserve(obstacle.halfplanes.size());
    for (const HalfPlane& h : obstacle.halfplanes) rows.push_back({h.normal, h.offset});
    return rows;
}

void validate_obstacle(const ObstaclePolytope& obstacle, Rect bounds) {
    const std::string name = "obstacle " + std::to_string(obstacle.id);
    if (obstacle.halfplanes.size() < 3) {
        throw Error(ErrorKind::invalid_input, name + " has fewer than 3 half-planes");
    }
    const auto rows = rows_of(obstacle);
    constexpr double big = 1e6;
    const auto loop = clip_polygon({-big, -big, big, big}, rows);
    if (loop.size() < 3 || polygon_area(loop) < 1e-12) {
        throw Error(ErrorKind::invalid_input, name + " is empty");
    }
    for (Vec2 v : loop) {
        if (std::abs(v.x) > 0.5 * big || std::abs(v.y) > 0.5 * big) {
            throw Error(ErrorKind::invalid_input, name + " is unbounded");
        }
        if (v.x < bounds.xmin - 1e-9 || v.x > bounds.xmax + 1e-9 || v.y < bounds.ymin - 1e-9 ||
            v.y > bounds.ymax + 1e-9) {
            throw Error(ErrorKind::invalid_input, name + " extends outside the bounds");
        }
    }
}

}  // namespace

HalfPlane HalfPlane::make(Vec2 normal, double offset) {
    const double scale = std::max(std::abs(normal.x), std::abs(normal.y));
    if (scale == 0.0 || !std::isfinite(scale) || !std::isfinite(offset)) {
        throw Error(ErrorKind::invalid_input, "half-plane normal must be finite and nonzero");
    }
    return {normal * (1.0 / scale), offset / scale};
}

std::vector<Vec2> clip_polygon(Rect rect, std::span<const LinearConstraint> rows) {
    std::vector<Vec2> poly{{rect.xmin, rect.ymin},
                           {rect.xmax, rect.ymin},
                           {rect.xmax, rect.ymax},
                           {rect.xmin, rect.ymax}};
    std::vector<Vec2> next;
    for (const LinearConstraint& row : rows) {
        next.clear();
        const std::size_t m = poly.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2 p = poly[i];
            const Vec2 q = poly[(i + 1) % m];
            const double fp = dot(row.a, p) - row.b;
            const double fq = dot(row.a, q) - row.b;
            if (fp <= 0) next.push_back(p);
            if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
                const double t = fp / (fp - fq);
                next.push_back(p + (q - p) * t);
            }
        }
        poly.swap(next);
        if (poly.size() < 3) return {};
    }
    if (polygon_area(poly) <= 0.0) return {};
    return poly;
}

double polygon_area(std::span<const Vec2> loop) {
    double twice = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        twice += cross(loop[i], loop[(i + 1) % loop.size()]);
    }
    return 0.5 * twice;
}

Vec2 polygon_centroid(std::span<const Vec2> loop) {
    const double a = polygon_area(loop);
    if (a <= 0.0) {
        Vec2 mean;
        for (Vec2 v : loop) mean = mean + v;
        return loop.empty() ? mean : mean * (1.0 / static_cast<double>(loop.size()));
    }
    Vec2 c;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec2 p = loop[i];
        const Vec2 q = loop[(i + 1) % loop.size()];
        c = c + (p + q) * cross(p, q);
    }
    return c * (1.0 / (6.0 * a));
}

std::vector<LinearConstraint> Arrangement::constraint_rows(const SignVector& signs) const {
    std::vector<LinearConstraint> rows;
    rows.reserve(signs.size() + 4);
    for (std::size_t k = 0; k < signs.size(); ++k) {
        const double s = signs[k];
        rows.push_back({hyperplanes_[k].normal * -s, -s * hyperplanes_[k].offset});
    }
    rows.push_back({{1, 0}, bounds_.xmax});
    rows.push_back({{-1, 0}, -bounds_.xmin});
    rows.push_back({{0, 1}, bounds_.ymax});
    rows.push_back({{0, -1}, -bounds_.ymin});
    return rows;
}

std::vector<EssentialConstraint> essential_constraints(const Arrangement& arrangement,
                                                       const SignVector& signs) {
    const auto rows = arrangement.constraint_rows(signs);
    std::vector<LinearConstraint> others;
    others.reserve(rows.size());
    std::vector<EssentialConstraint> result;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        others.clear();
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (j != k) others.push_back(rows[j]);
        }
        const LpResult lp = solve_lp2d(rows[k].a, others, arrangement.lp_seed() + k);
        bool essential = false;
        switch (lp.status) {
            case LpStatus::unbounded:
                essential = true;
                break;
            case LpStatus::optimal:
                essential = lp.value - rows[k].b > kEssentialTol;
                break;
            case LpStatus::infeasible:
                throw Error(ErrorKind::numerical_failure,
                            "essential-constraint LP infeasible for cell " +
                                Arrangement::key_of(signs));
        }
        if (!essential) continue;
        const int index = static_cast<int>(k);
        const std::int8_t side = index < arrangement.hyperplane_count() ? signs[k] : std::int8_t{-1};
        result.push_back({index, side});
    }
    return result;
}

std::vector<EssentialConstraint> essential_constraints(const Arrangement& arrangement,
                                                       const Cell& cell) {
    return essential_constraints(arrangement, cell.signs);
}

Arrangement Arrangement::build(std::span<const ObstaclePolytope> obstacles, Rect bounds,
                               const ArrangementOptions& options) {
    if (obstacles.empty()) {
        throw Error(ErrorKind::invalid_input, "at least one obstacle is required");
    }
    if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin)) {
        throw Error(ErrorKind::invalid_input, "environment bounds are degenerate");
    }

    Arrangement arr;
    arr.bounds_ = bounds;
    arr.lp_seed_ = options.lp_seed;
    arr.obstacles_.assign(obstacles.begin(), obstacles.end());
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
        validate_obstacle(obstacles[i], bounds);
        for (const HalfPlane& h : obstacles[i].halfplanes) {
            arr.hyperplanes_.push_back(h);
            arr.owner_.push_back(static_cast<int>(i));
        }
    }
    for (std::size_t i = 0; i < arr.hyperplanes_.size(); ++i) {
        for (std::size_t j = i + 1; j < arr.hyperplanes_.size(); ++j) {
            if (same_line(arr.hyperplanes_[i], arr.hyperplanes_[j])) {
                throw Error(ErrorKind::invalid_input,
                            "coincident hyperplanes " + describe(arr.hyperplanes_[i]) +
                                " (obstacle " + std::to_string(obstacles[arr.owner_[i]].id) +
                                ") and obstacle " + std::to_string(obstacles[arr.owner_[j]].id));
            }
        }
    }

    struct Found {
        SignVector signs;
        std::vector<EssentialConstraint> essential;
    };
    std::unordered_map<std::string, std::size_t> index;
    std::vector<Found> found;
    std::deque<std::size_t> queue;

    auto add = [&](SignVector signs) {
        std::string k = key_of(signs);
        if (index.contains(k)) return;
        index.emplace(std::move(k), found.size());
        queue.push_back(found.size());
        found.push_back({std::move(signs), {}});
    };

    std::vector<Vec2> seeds = options.seeds;
    {
        // A coarse lattice guarantees at least one seed off every hyperplane.
        constexpr int lattice = 7;
        for (int i = 0; i < lattice; ++i) {
            for (int j = 0; j < lattice; ++j) {
                const double fx = (i + 0.5 + 0.0137 * j) / lattice;
                const double fy = (j + 0.5 + 0.0071 * i) / lattice;
                seeds.push_back({bounds.xmin + fx * (bounds.xmax - bounds.xmin),
                                 bounds.ymin + fy * (bounds.ymax - bounds.ymin)});
            }
        }
    }
    for (Vec2 p : seeds) {
        if (!bounds.contains(p)) continue;
        bool on_line = false;
        for (const HalfPlane& h : arr.hyperplanes_) {
            if (h.distance(p) <= kTieTolerance) {
                on_line = true;
                break;
            }
        }
        if (!on_line) add(arr.sign_vector(p));
    }

    while (!queue.empty()) {
        const std::size_t at = queue.front();
        queue.pop_front();
        found[at].essential = essential_constraints(arr, found[at].signs);
        const SignVector signs = found[at].signs;
        for (const EssentialConstraint& e : found[at].essential) {
            if (arr.is_bound_index(e.index)) continue;
            SignVector flipped = signs;
            flipped[static_cast<std::size_t>(e.index)] = static_cast<std::int8_t>(-flipped[e.index]);
            if (index.contains(key_of(flipped))) continue;
            auto rows = arr.constraint_rows(flipped);
            for (LinearConstraint& row : rows) row.b -= kInteriorMargin * norm(row.a);
            if (solve_lp2d({0, 0}, rows, arr.lp_seed_).status == LpStatus::infeasible) continue;
            add(std::move(flipped));
        }
    }

    std::sort(found.begin(), found.end(),
              [](const Found& a, const Found& b) { return a.signs < b.signs; });
    arr.cells_.reserve(found.size());
    for (std::size_t i = 0; i < found.size(); ++i) {
        Cell cell;
        cell.id = static_cast<int>(i);
        cell.signs = std::move(found[i].signs);
        cell.essential = std::move(found[i].essential);
        std::size_t offset = 0;
        for (const ObstaclePolytope& ob : arr.obstacles_) {
            const std::size_t d = ob.halfplanes.size();
            if (std::all_of(cell.signs.begin() + static_cast<std::ptrdiff_t>(offset),
                            cell.signs.begin() + static_cast<std::ptrdiff_t>(offset + d),
                            [](std::int8_t s) { return s < 0; })) {
                cell.is_obstacle = true;
            }
            offset += d;
        }
        cell.outline = clip_polygon(bounds, arr.constraint_rows(cell.signs));
        cell.area = polygon_area(cell.outline);
        cell.interior = polygon_centroid(cell.outline);
        std::string k = key_of(cell.signs);
        arr.by_key_.emplace(k, cell.id);
        arr.keys_.push_back(std::move(k));
        arr.cells_.push_back(std::move(cell));
    }
    return arr;
}

SignVector Arrangement::sign_vector(Vec2 p) const {
    SignVector signs(hyperplanes_.size());
    for (std::size_t k = 0; k < hyperplanes_.size(); ++k) {
        const HalfPlane& h = hyperplanes_[k];
        if (h.distance(p) <= kTieTolerance) {
            std::ostringstream os;
            os << "point (" << p.x << ", " << p.y << ") lies on hyperplane " << k;
            throw Error(ErrorKind::boundary_point, os.str());
        }
        signs[k] = h.eval(p) > 0 ? 1 : -1;
    }
    return signs;
}

std::optional<int> Arrangement::find_cell(const SignVector& signs) const {
    return find_key(key_of(signs));
}

std::optional<int> Arrangement::find_key(const std::string& key) const {
    auto it = by_key_.find(key);
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
}

int Arrangement::locate_cell(Vec2 p) const {
    if (!bounds_.contains(p)) {
        throw Error(ErrorKind::invalid_input, "point outside the environment bounds");
    }
    const SignVector signs = sign_vector(p);
    if (auto id = find_cell(signs)) return *id;
    throw Error(ErrorKind::arrangement_incomplete,
                "no enumerated cell has sign vector " + key_of(signs));
}

std::string Arrangement::key_of(const SignVector& signs) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out((signs.size() + 3) / 4, '0');
    for (std::size_t i = 0; i < out.size(); ++i) {
        int value = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            const std::size_t k = 4 * i + b;
            if (k < signs.size() && signs[k] > 0) value |= 1 << (3 - b);
        }
        out[i] = digits[value];
    }
    return out;
}

int Arrangement::free_cell_count() const {
    return static_cast<int>(
        std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return !c.is_obstacle; }));
}

}  // namespace prefnav
