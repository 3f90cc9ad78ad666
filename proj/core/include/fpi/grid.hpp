#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace fpi {

/// User-facing description of the staggered box grid and material constants.
struct GridSpec {
  int dim = 2;
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  std::array<int, 3> cells{16, 16, 1};
  double viscosity = 1.0;
  std::optional<double> lame_lambda;
  std::optional<double> poisson_mu;

  /// Resolves lambda from mu when needed and checks consistency if both are set.
  double resolved_lambda() const;
  /// Throws std::invalid_argument on any out-of-range or inconsistent entry.
  void validate() const;
};

/// Immutable staggered-grid geometry.
///
/// The box occupies (0,L_a) along every horizontal axis a and (-L_v, 0) along
/// the vertical axis v = dim-1, so the elastic interface sits at x_v = 0 (the
/// top face); all remaining faces are rigid walls.  Velocity component c lives
/// on faces normal to axis c (MAC layout), pressure at cell centers, and plate
/// displacement nodes are collocated with the columns of the tangential
/// velocity components at the top face.
class Grid {
 public:
  static Grid build(const GridSpec& spec);

  int dim() const { return dim_; }
  double nu() const { return nu_; }
  double lambda() const { return lambda_; }
  int cells(int axis) const { return cells_[axis]; }
  double extent(int axis) const { return extent_[axis]; }
  double h(int axis) const { return h_[axis]; }
  int vertical_axis() const { return dim_ - 1; }

  /// Number of stored faces for velocity component c along axis a.
  int comp_extent(int c, int a) const { return cells_[a] + (a == c ? 1 : 0); }
  /// Total stored faces for velocity component c (boundary-normal included).
  int comp_size(int c) const { return comp_size_[c]; }
  int total_velocity_size() const { return total_velocity_size_; }
  int cell_count() const { return cell_count_; }

  /// Flat index into component c at multi-index (i,j[,k]); unused axes are 0.
  int vidx(int c, int i, int j, int k = 0) const {
    return (k * comp_extent(c, 1) + j) * comp_extent(c, 0) + i;
  }
  int cidx(int i, int j, int k = 0) const {
    return (k * cells_[1] + j) * cells_[0] + i;
  }

  /// True when face (i,j,k) of component c lies on the domain boundary with
  /// c the normal direction there (value pinned to zero).
  bool normal_boundary_face(int c, int i, int j, int k = 0) const {
    const int pos = (c == 0) ? i : (c == 1) ? j : k;
    return pos == 0 || pos == cells_[c];
  }

  int plate_components() const { return dim_ - 1; }
  /// Stored nodes for plate component c along horizontal axis a (a < dim-1).
  int plate_extent(int c, int a) const { return cells_[a] + (a == c ? 1 : 0); }
  int plate_size(int c) const { return plate_size_[c]; }
  int total_plate_size() const { return total_plate_size_; }
  int pidx(int c, int i, int j = 0) const { return j * plate_extent(c, 0) + i; }
  /// True when a plate node sits on the clamped edge along its own axis.
  bool plate_clamped_node(int c, int i, int j = 0) const {
    const int pos = (c == 0) ? i : j;
    return pos == 0 || pos == cells_[c];
  }

  /// Quadrature weight of one velocity face (uniform cell volume).
  double face_weight() const { return face_weight_; }
  /// Quadrature weight of one plate node (horizontal cell area).
  double plate_weight() const { return plate_weight_; }
  /// Grid spacing normal to the interface.
  double hz() const { return h_[dim_ - 1]; }

  /// Physical coordinate of face (i,j,k) of component c along axis a.
  double face_coord(int c, int a, int i, int j, int k = 0) const;
  /// Physical coordinate of cell center (i,j,k) along axis a.
  double cell_coord(int a, int i, int j, int k = 0) const;
  /// Physical coordinate of plate node (i,j) of component c along axis a.
  double plate_coord(int c, int a, int i, int j = 0) const;

 private:
  Grid() = default;

  int dim_ = 2;
  std::array<double, 3> extent_{};
  std::array<int, 3> cells_{};
  std::array<double, 3> h_{};
  double nu_ = 1.0;
  double lambda_ = 2.0;
  std::array<int, 3> comp_size_{};
  std::array<int, 2> plate_size_{};
  int total_velocity_size_ = 0;
  int total_plate_size_ = 0;
  int cell_count_ = 0;
  double face_weight_ = 0.0;
  double plate_weight_ = 0.0;
};

}  // namespace fpi
