#include "facto/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "facto/error.hpp"

namespace facto {

namespace {

DistanceResult sphere_distance(const SpherePrimitive& s, const Eigen::Vector3d& x) {
  const Eigen::Vector3d r = x - s.center;
  const double n = r.norm();
  DistanceResult out;
  out.distance = n - s.radius;
  out.gradient = n > 0.0 ? Eigen::Vector3d(r / n) : Eigen::Vector3d::UnitX();
  return out;
}

DistanceResult box_distance(const BoxPrimitive& b, const Eigen::Vector3d& x) {
  const Eigen::Vector3d center = 0.5 * (b.min + b.max);
  const Eigen::Vector3d half = 0.5 * (b.max - b.min);
  const Eigen::Vector3d rel = x - center;
  const Eigen::Vector3d q = rel.cwiseAbs() - half;
  DistanceResult out;
  const Eigen::Vector3d outside = q.cwiseMax(0.0);
  const double outside_norm = outside.norm();
  if (outside_norm > 0.0) {
    out.distance = outside_norm;
    for (int i = 0; i < 3; ++i) out.gradient[i] = std::copysign(outside[i], rel[i]) / outside_norm;
    return out;
  }
  int axis = 0;
  q.maxCoeff(&axis);
  out.distance = q[axis];
  out.gradient = Eigen::Vector3d::Zero();
  out.gradient[axis] = rel[axis] >= 0.0 ? 1.0 : -1.0;
  return out;
}

DistanceResult capsule_distance(const CapsulePrimitive& c, const Eigen::Vector3d& x) {
  const Eigen::Vector3d ab = c.b - c.a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((x - c.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return sphere_distance({c.a + t * ab, c.radius}, x);
}

DistanceResult halfspace_distance(const HalfspacePrimitive& h, const Eigen::Vector3d& x) {
  return {h.normal.dot(x) - h.offset, h.normal};
}

DistanceResult primitives_distance(const std::vector<Primitive>& primitives,
                                   const Eigen::Vector3d& x) {
  DistanceResult best;
  for (const Primitive& p : primitives) {
    const DistanceResult r = primitive_distance(p, x);
    if (r.distance < best.distance) best = r;
  }
  return best;
}

}  // namespace

DistanceResult primitive_distance(const Primitive& primitive, const Eigen::Vector3d& x) {
  return std::visit(
      [&](const auto& p) -> DistanceResult {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SpherePrimitive>) return sphere_distance(p, x);
        else if constexpr (std::is_same_v<P, BoxPrimitive>) return box_distance(p, x);
        else if constexpr (std::is_same_v<P, CapsulePrimitive>) return capsule_distance(p, x);
        else return halfspace_distance(p, x);
      },
      primitive);
}

GridSDF::GridSDF(Eigen::Vector3d origin, double resolution, std::array<int, 3> dims,
                 std::vector<double> values)
    : origin_(std::move(origin)), resolution_(resolution), dims_(dims), values_(std::move(values)) {
  if (!(resolution_ > 0.0)) throw DomainError("grid resolution must be positive");
  for (int d : dims_) {
    if (d < 2) throw DomainError("grid needs at least two samples per axis");
  }
  const double count = static_cast<double>(dims_[0]) * dims_[1] * dims_[2];
  if (count > kMaxGridCells) throw CapacityError("grid exceeds 1e8 cells");
  if (static_cast<double>(values_.size()) != count) {
    throw DimensionError("grid value count does not match its dimensions");
  }
}

bool GridSDF::contains(const Eigen::Vector3d& x) const {
  for (int a = 0; a < 3; ++a) {
    const double u = (x[a] - origin_[a]) / resolution_;
    if (!(u >= 0.0 && u <= dims_[a] - 1)) return false;
  }
  return true;
}

Eigen::Vector3d GridSDF::node_gradient(int i, int j, int k) const {
  const std::array<int, 3> idx{i, j, k};
  Eigen::Vector3d g;
  for (int a = 0; a < 3; ++a) {
    std::array<int, 3> lo = idx, hi = idx;
    lo[a] = std::max(idx[a] - 1, 0);
    hi[a] = std::min(idx[a] + 1, dims_[a] - 1);
    g[a] = (at(hi[0], hi[1], hi[2]) - at(lo[0], lo[1], lo[2])) / ((hi[a] - lo[a]) * resolution_);
  }
  return g;
}

DistanceResult GridSDF::query(const Eigen::Vector3d& x) const {
  if (!contains(x)) throw OutOfBoundsError("point outside the grid");
  std::array<int, 3> base{};
  Eigen::Vector3d frac;
  for (int a = 0; a < 3; ++a) {
    const double u = (x[a] - origin_[a]) / resolution_;
    base[a] = std::min(static_cast<int>(std::floor(u)), dims_[a] - 2);
    frac[a] = u - base[a];
  }
  DistanceResult out;
  out.distance = 0.0;
  out.gradient.setZero();
  for (int c = 0; c < 8; ++c) {
    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    const double w = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) *
                     (dk ? frac[2] : 1.0 - frac[2]);
    if (w == 0.0) continue;
    out.distance += w * at(base[0] + di, base[1] + dj, base[2] + dk);
    out.gradient += w * node_gradient(base[0] + di, base[1] + dj, base[2] + dk);
  }
  return out;
}

void write_grid(const GridSDF& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open grid file for writing: " + path);
  std::ostringstream header;
  header.precision(17);
  header << grid.origin()[0] << ' ' << grid.origin()[1] << ' ' << grid.origin()[2] << ' '
         << grid.resolution() << ' ' << grid.dims()[0] << ' ' << grid.dims()[1] << ' '
         << grid.dims()[2] << '\n';
  out << header.str();
  for (double v : grid.values()) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    char bytes[4];
    std::memcpy(bytes, &bits, 4);
    out.write(bytes, 4);
  }
  if (!out) throw DomainError("failed writing grid file: " + path);
}

GridSDF read_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open grid file: " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  Eigen::Vector3d origin;
  double resolution = 0.0;
  std::array<int, 3> dims{};
  if (!(header >> origin[0] >> origin[1] >> origin[2] >> resolution >> dims[0] >> dims[1] >>
        dims[2])) {
    throw DomainError("malformed grid header in " + path);
  }
  const double count = static_cast<double>(dims[0]) * dims[1] * dims[2];
  if (count > kMaxGridCells) throw CapacityError("grid exceeds 1e8 cells");
  if (count <= 0) throw DomainError("grid dimensions must be positive in " + path);
  std::vector<double> values(static_cast<std::size_t>(count));
  for (double& v : values) {
    char bytes[4];
    if (!in.read(bytes, 4)) throw DomainError("truncated grid payload in " + path);
    std::uint32_t bits;
    std::memcpy(&bits, bytes, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    v = std::bit_cast<float>(bits);
  }
  return GridSDF(origin, resolution, dims, std::move(values));
}

void Scene::validate() const {
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const std::string at = "primitive " + std::to_string(i);
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, SpherePrimitive> || std::is_same_v<P, CapsulePrimitive>) {
            if (!(p.radius > 0.0)) throw DomainError(at + ": radius must be positive");
          } else if constexpr (std::is_same_v<P, BoxPrimitive>) {
            if (!(p.min.array() < p.max.array()).all()) {
              throw DomainError(at + ": box min must be below max componentwise");
            }
          } else {
            if (std::abs(p.normal.norm() - 1.0) > 1e-9) {
              throw DomainError(at + ": halfspace normal must be unit length");
            }
          }
        },
        primitives[i]);
  }
}

DistanceResult signed_distance(const Scene& scene, const Eigen::Vector3d& x) {
  if (scene.grid && scene.grid->contains(x)) return scene.grid->query(x);
  if (scene.grid && scene.primitives.empty()) {
    throw OutOfBoundsError("point outside the grid and no primitives to fall back on");
  }
  return primitives_distance(scene.primitives, x);
}

GridSDF grid_from_primitives(const Scene& scene, const Eigen::Vector3d& lower,
                             const Eigen::Vector3d& upper, double resolution) {
  if (!(resolution > 0.0)) throw DomainError("grid resolution must be positive");
  std::array<int, 3> dims{};
  double count = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (!(upper[a] > lower[a])) throw DomainError("grid bounds must have positive extent");
    const double cells = std::ceil((upper[a] - lower[a]) / resolution - 1e-9);
    count *= std::max(cells, 2.0);
    if (count > kMaxGridCells) throw CapacityError("grid exceeds 1e8 cells");
    dims[a] = std::max(static_cast<int>(cells), 2);
  }
  const Eigen::Vector3d origin = lower + Eigen::Vector3d::Constant(0.5 * resolution);
  std::vector<double> values(static_cast<std::size_t>(count));
  std::size_t n = 0;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const Eigen::Vector3d x = origin + resolution * Eigen::Vector3d(i, j, k);
        const double d = primitives_distance(scene.primitives, x).distance;
        values[n++] = std::isfinite(d) ? d : kEmptyGridValue;
      }
    }
  }
  return GridSDF(origin, resolution, dims, std::move(values));
}

void CollisionParams::validate() const {
  if (!(epsilon > 0.0)) throw DomainError("collision epsilon must be positive");
  if (p < 1) throw DomainError("collision order p must be at least 1");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("arc-length exponent q must lie in [0, 1]");
}

CostResult collision_cost(double d, const CollisionParams& params) {
  const double eps = params.epsilon;
  if (d < 0.0) return {eps - d, -1.0};
  if (d <= eps) {
    const double p = params.p;
    const double scale = 1.0 / (p * std::pow(eps, p - 1.0));
    const double gap = eps - d;
    return {scale * std::pow(gap, p), -scale * p * std::pow(gap, p - 1.0)};
  }
  return {0.0, 0.0};
}

AllowedCollisionMatrix::AllowedCollisionMatrix(std::vector<int> sphere_counts) {
  offsets_.assign(1, 0);
  for (int c : sphere_counts) offsets_.push_back(offsets_.back() + c);
  size_ = offsets_.back();
  flags_.assign(static_cast<std::size_t>(size_) * size_, 0);
}

std::pair<int, int> AllowedCollisionMatrix::locate(int body) const {
  if (body < 0 || body >= size_) throw DimensionError("body index out of range");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), body);
  const int robot = static_cast<int>(it - offsets_.begin()) - 1;
  return {robot, body - offsets_[robot]};
}

void AllowedCollisionMatrix::set(int a, int b, bool check) {
  if (a < 0 || b < 0 || a >= size_ || b >= size_) throw DimensionError("body index out of range");
  if (a == b) return;
  flags_[static_cast<std::size_t>(a) * size_ + b] = check;
  flags_[static_cast<std::size_t>(b) * size_ + a] = check;
}

AllowedCollisionMatrix build_acm(const std::vector<RobotModel>& robots,
                                 const std::vector<AcmOverride>& overrides) {
  if (robots.empty()) throw DomainError("allowed-collision matrix needs at least one robot");
  std::vector<int> counts;
  for (const RobotModel& r : robots) counts.push_back(static_cast<int>(r.spheres.size()));
  AllowedCollisionMatrix acm(counts);
  for (int ra = 0; ra < static_cast<int>(robots.size()); ++ra) {
    for (int sa = 0; sa < counts[ra]; ++sa) {
      const int a = acm.global_index(ra, sa);
      for (int rb = ra; rb < static_cast<int>(robots.size()); ++rb) {
        for (int sb = (rb == ra ? sa + 1 : 0); sb < counts[rb]; ++sb) {
          const int b = acm.global_index(rb, sb);
          bool check = true;
          if (ra == rb) {
            const int la = robots[ra].spheres[sa].link;
            const int lb = robots[rb].spheres[sb].link;
            check = std::abs(la - lb) > 1;
          }
          acm.set(a, b, check);
        }
      }
    }
  }
  for (const AcmOverride& o : overrides) acm.set(o.a, o.b, o.checked);
  return acm;
}

SelfDistance self_distance(const std::vector<SphereState>& all_states,
                           const AllowedCollisionMatrix& acm, int body) {
  const auto [robot, sphere] = acm.locate(body);
  const Eigen::Vector3d c = all_states[robot].centers.col(sphere);
  const double r = all_states[robot].radii[sphere];
  SelfDistance best;
  for (int other = 0; other < static_cast<int>(all_states.size()); ++other) {
    const SphereState& s = all_states[other];
    for (int j = 0; j < s.size(); ++j) {
      const int partner = acm.global_index(other, j);
      if (partner == body || !acm.checked(body, partner)) continue;
      const double d = (s.centers.col(j) - c).norm() - r - s.radii[j];
      if (d < best.distance) best = {d, partner};
    }
  }
  return best;
}

}  // namespace facto
