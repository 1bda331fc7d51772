#include "qca/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qca/errors.hpp"

namespace qca {

namespace {

std::string format_point(std::span<const double> p) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

bool same_point(std::span<const double> a, std::span<const double> b) {
  return std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

Box::Box(int dim, std::vector<double> sides) : dim_(dim), sides_(std::move(sides)) {
  if (dim_ < 1) throw InvalidArgument("box dimension must be positive");
  if (sides_.size() == 1 && dim_ > 1) sides_.assign(static_cast<std::size_t>(dim_), sides_.front());
  if (sides_.size() != static_cast<std::size_t>(dim_))
    throw InvalidArgument("box needs one side length per axis");
  for (double s : sides_)
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("box side lengths must be positive");
}

Box Box::cube(int dim, double side) { return Box(dim, std::vector<double>(static_cast<std::size_t>(dim), side)); }

double Box::volume() const {
  double v = 1.0;
  for (double s : sides_) v *= s;
  return v;
}

bool Box::contains(std::span<const double> p) const {
  if (p.size() != sides_.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] >= 0.0 && p[i] < sides_[i])) return false;
  return true;
}

Configuration::Configuration(int dim) : dim_(dim) {
  if (dim_ < 1) throw InvalidArgument("configuration dimension must be positive");
}

Configuration::Configuration(int dim, std::vector<double> coords) : Configuration(dim) {
  if (coords.size() % static_cast<std::size_t>(dim) != 0)
    throw InvalidArgument("coordinate count is not a multiple of the dimension");
  coords_.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); i += static_cast<std::size_t>(dim))
    push_back({coords.data() + i, static_cast<std::size_t>(dim)});
}

Configuration Configuration::from_points(int dim, const std::vector<std::vector<double>>& points) {
  Configuration c(dim);
  for (const auto& p : points) {
    if (p.size() != static_cast<std::size_t>(dim)) throw InvalidArgument("point has wrong dimension");
    c.push_back(p);
  }
  return c;
}

Configuration Configuration::line(std::initializer_list<double> xs) {
  return Configuration(1, std::vector<double>(xs));
}

void Configuration::push_back(std::span<const double> p) {
  if (p.size() != static_cast<std::size_t>(dim_)) throw InvalidArgument("point has wrong dimension");
  for (std::size_t i = 0; i < size(); ++i)
    if (same_point(point(i), p)) throw InvalidArgument("duplicate point " + format_point(p));
  coords_.insert(coords_.end(), p.begin(), p.end());
}

bool Configuration::intersects(const Configuration& other) const {
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < other.size(); ++j)
      if (same_point(point(i), other.point(j))) return true;
  return false;
}

Configuration Configuration::united(const Configuration& other) const {
  if (other.dim_ != dim_) throw InvalidArgument("configurations have different dimensions");
  Configuration out = *this;
  for (std::size_t j = 0; j < other.size(); ++j) out.push_back(other.point(j));
  return out;
}

CubePartition::CubePartition(Box box, double edge) : box_(std::move(box)), edge_(edge) {
  if (!(edge_ > 0.0) || !std::isfinite(edge_)) throw InvalidArgument("cube edge must be positive");
  for (std::size_t i = 0; i < box_.sides().size(); ++i) {
    const double ratio = box_.sides()[i] / edge_;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-12 * ratio) {
      std::ostringstream os;
      os.precision(17);
      os << "box side " << box_.sides()[i] << " on axis " << i << " is not an integer multiple of edge " << edge_;
      throw InvalidArgument(os.str());
    }
    per_axis_.push_back(static_cast<std::size_t>(n));
    count_ *= static_cast<std::size_t>(n);
  }
}

CubeIndex CubePartition::cube_index_unchecked(std::span<const double> p) const {
  CubeIndex idx = 0;
  for (std::size_t i = 0; i < per_axis_.size(); ++i) {
    auto k = static_cast<std::int64_t>(std::floor(p[i] / edge_));
    // floor(x / a) can land one cube off when x sits within rounding of a face;
    // settle it by comparing against the face coordinates themselves.
    if (p[i] < static_cast<double>(k) * edge_) --k;
    else if (p[i] >= static_cast<double>(k + 1) * edge_) ++k;
    k = std::clamp<std::int64_t>(k, 0, static_cast<std::int64_t>(per_axis_[i]) - 1);
    idx = idx * per_axis_[i] + static_cast<std::size_t>(k);
  }
  return idx;
}

CubeIndex CubePartition::cube_index(std::span<const double> p) const {
  if (!box_.contains(p)) throw InvalidArgument("point " + format_point(p) + " lies outside the box");
  return cube_index_unchecked(p);
}

std::vector<std::int64_t> CubePartition::lattice(CubeIndex index) const {
  std::vector<std::int64_t> r(per_axis_.size());
  for (std::size_t i = per_axis_.size(); i-- > 0;) {
    r[i] = static_cast<std::int64_t>(index % per_axis_[i]);
    index /= per_axis_[i];
  }
  return r;
}

std::vector<double> CubePartition::lower_corner(CubeIndex index) const {
  auto r = lattice(index);
  std::vector<double> x(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) x[i] = static_cast<double>(r[i]) * edge_;
  return x;
}

CubePartition build_partition(const Box& box, double edge) { return CubePartition(box, edge); }

bool compatible_edges(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0) || fine > coarse * (1 + 1e-12)) return false;
  const double ratio = coarse / fine;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio;
}

Occupancy occupancy(const Configuration& config, const CubePartition& part) {
  if (config.dim() != part.dim()) throw InvalidArgument("configuration and partition dimensions differ");
  Occupancy occ;
  for (std::size_t i = 0; i < config.size(); ++i) ++occ[part.cube_index(config.point(i))];
  return occ;
}

bool is_dilute(const Configuration& config, const CubePartition& part) {
  const auto occ = occupancy(config, part);
  return std::all_of(occ.begin(), occ.end(), [](const auto& kv) { return kv.second <= 1; });
}

bool chi_minus(const Occupancy& occ, CubeIndex cube) {
  auto it = occ.find(cube);
  return it == occ.end() || it->second <= 1;
}

bool chi_plus(const Occupancy& occ, CubeIndex cube) { return !chi_minus(occ, cube); }

bool dense_set_indicator(const Occupancy& occ, const CubePartition& part, std::uint64_t dense) {
  if (part.cube_count() > 64) throw InvalidArgument("dense-set masks support at most 64 cubes");
  for (CubeIndex c = 0; c < part.cube_count(); ++c) {
    const bool in_x = (dense >> c) & 1u;
    if (in_x ? !chi_plus(occ, c) : !chi_minus(occ, c)) return false;
  }
  return true;
}

}  // namespace qca
