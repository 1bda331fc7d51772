#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <vector>

namespace qca {

/// Axis-aligned box [0, L_1) x ... x [0, L_d) anchored at the origin.
class Box {
 public:
  Box(int dim, std::vector<double> sides);
  /// Cube [0, side)^dim.
  static Box cube(int dim, double side);

  int dim() const { return dim_; }
  const std::vector<double>& sides() const { return sides_; }
  double volume() const;
  bool contains(std::span<const double> point) const;

 private:
  int dim_;
  std::vector<double> sides_;
};

/// Finite set of distinct points in R^d, stored as a flat coordinate array.
class Configuration {
 public:
  explicit Configuration(int dim = 1);
  /// `coords` holds size()*dim values; throws if two points coincide.
  Configuration(int dim, std::vector<double> coords);
  static Configuration from_points(int dim, const std::vector<std::vector<double>>& points);
  /// One-dimensional convenience constructor.
  static Configuration line(std::initializer_list<double> xs);

  int dim() const { return dim_; }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return coords_.empty(); }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& coords() const { return coords_; }

  void push_back(std::span<const double> p);
  /// Union with a configuration that shares no point with this one.
  Configuration united(const Configuration& other) const;
  bool intersects(const Configuration& other) const;

 private:
  int dim_;
  std::vector<double> coords_;
};

using CubeIndex = std::size_t;
using Occupancy = std::map<CubeIndex, std::size_t>;

/// Grid of cubes with edge a tiling a box. Cube r covers
/// a r_i <= x_i < a (r_i + 1) on every axis; a point on an upper face belongs
/// to the next cube.
class CubePartition {
 public:
  CubePartition(Box box, double edge);

  const Box& box() const { return box_; }
  double edge() const { return edge_; }
  int dim() const { return box_.dim(); }
  const std::vector<std::size_t>& cubes_per_axis() const { return per_axis_; }
  std::size_t cube_count() const { return count_; }

  /// Linear (row-major) index of the cube containing p. Throws if p lies
  /// outside the box.
  CubeIndex cube_index(std::span<const double> p) const;
  /// Same as cube_index without the box check; p must be inside the box.
  CubeIndex cube_index_unchecked(std::span<const double> p) const;
  std::vector<std::int64_t> lattice(CubeIndex index) const;
  /// Lower corner of a cube.
  std::vector<double> lower_corner(CubeIndex index) const;

 private:
  Box box_;
  double edge_;
  std::vector<std::size_t> per_axis_;
  std::size_t count_ = 1;
};

CubePartition build_partition(const Box& box, double edge);

/// True iff coarse/fine is a positive integer (relative tolerance 1e-9).
bool compatible_edges(double coarse, double fine);

Occupancy occupancy(const Configuration& config, const CubePartition& part);

/// Every cube holds at most one point.
bool is_dilute(const Configuration& config, const CubePartition& part);

/// chi_-^cube: the cube holds 0 or 1 points.
bool chi_minus(const Occupancy& occ, CubeIndex cube);
/// chi_+^cube = 1 - chi_-^cube.
bool chi_plus(const Occupancy& occ, CubeIndex cube);

/// Product over the cubes of `dense` of chi_+ times the product over all other
/// cubes of the box of chi_-. `dense` is a bit mask over cube indices, so the
/// partition may hold at most 64 cubes.
bool dense_set_indicator(const Occupancy& occ, const CubePartition& part, std::uint64_t dense);

}  // namespace qca
