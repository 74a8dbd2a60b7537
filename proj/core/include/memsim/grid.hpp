#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "memsim/errors.hpp"

namespace memsim {

using CellField = Eigen::VectorXd;
using FaceField = Eigen::VectorXd;

/// Label carried by a boundary face. Interior faces carry `Interior`.
enum class BoundaryTag : std::uint8_t { Interior = 0, D1 = 1, D2 = 2, N = 3 };

std::string_view to_string(BoundaryTag tag);
BoundaryTag parse_boundary_tag(std::string_view text);

/// Small bit set over boundary tags.
class TagSet {
 public:
  constexpr TagSet() = default;
  constexpr TagSet(std::initializer_list<BoundaryTag> tags) {
    for (auto t : tags) bits_ |= bit(t);
  }
  constexpr bool contains(BoundaryTag t) const { return (bits_ & bit(t)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool operator==(const TagSet&) const = default;

  static constexpr TagSet terminals() { return {BoundaryTag::D1, BoundaryTag::D2}; }

 private:
  static constexpr std::uint8_t bit(BoundaryTag t) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t));
  }
  std::uint8_t bits_ = 0;
};

enum class Edge : std::uint8_t { Left = 0, Right = 1, Bottom = 2, Top = 3 };

/// Labeled piece of a rectangle edge, in fractions of the edge length.
/// Left/right edges are parametrized bottom to top, bottom/top edges left to right.
struct EdgeSegment {
  double begin = 0.0;
  double end = 1.0;
  BoundaryTag tag = BoundaryTag::N;
};

struct DomainSpec {
  double length_x = 1.0;
  double length_y = 1.0;
  std::array<std::vector<EdgeSegment>, 4> layout;

  /// Two-terminal layout: left edge D1, right edge D2, top and bottom insulating.
  static DomainSpec rectangle(double length_x, double length_y);
  static DomainSpec unit_square() { return rectangle(1.0, 1.0); }

  const std::vector<EdgeSegment>& edge(Edge e) const { return layout[static_cast<int>(e)]; }
  std::vector<EdgeSegment>& edge(Edge e) { return layout[static_cast<int>(e)]; }

  /// Total length labeled with `tag`.
  double tagged_length(BoundaryTag tag) const;

  /// Throws ConfigError on overlapping/uncovered segments, zero-measure
  /// segments or missing terminals.
  void validate() const;
};

enum class Axis : std::uint8_t { X = 0, Y = 1 };

/// A cell face. The unit normal points from `owner` to `neighbor`
/// (positive axis direction for interior faces) or outward on the boundary.
struct Face {
  int owner = -1;
  int neighbor = -1;  // -1 on the boundary
  Axis axis = Axis::X;
  double normal_sign = 1.0;  // +1 if the normal points along +axis
  double length = 0.0;
  double distance = 0.0;     // owner center to neighbor center (or to the face midpoint)
  double x = 0.0;
  double y = 0.0;
  BoundaryTag tag = BoundaryTag::Interior;

  bool is_boundary() const { return neighbor < 0; }
  /// Volume of the diamond associated with the face, used for face quadrature.
  double weight() const { return length * distance; }
};

/// Uniform cell-centered rectangular grid. Cells are numbered x-fastest.
/// Faces are ordered: interior x-normal faces, interior y-normal faces,
/// then boundary faces left, right, bottom, top.
class Mesh {
 public:
  Mesh() = default;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double length_x() const { return nx_ * hx_; }
  double length_y() const { return ny_ * hy_; }
  int num_cells() const { return nx_ * ny_; }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int first_boundary_face() const { return first_boundary_; }
  double cell_area() const { return hx_ * hy_; }

  int cell(int i, int j) const { return j * nx_ + i; }
  double center_x(int c) const { return (c % nx_ + 0.5) * hx_; }
  double center_y(int c) const { return (c / nx_ + 0.5) * hy_; }

  const std::vector<Face>& faces() const { return faces_; }
  const Face& face(int f) const { return faces_[static_cast<std::size_t>(f)]; }

  std::vector<int> boundary_faces(BoundaryTag tag) const;
  std::size_t count_tag(BoundaryTag tag) const;

  CellField zeros_cells() const { return CellField::Zero(num_cells()); }
  FaceField zeros_faces() const { return FaceField::Zero(num_faces()); }

  friend Mesh build_mesh(const DomainSpec& spec, int nx, int ny);

 private:
  int nx_ = 0;
  int ny_ = 0;
  double hx_ = 0.0;
  double hy_ = 0.0;
  int first_boundary_ = 0;
  std::vector<Face> faces_;
};

Mesh build_mesh(const DomainSpec& spec, int nx, int ny);

/// Sum over cells of value * area.
double integrate_cells(const Mesh& mesh, const CellField& field);

/// Face quadrature: sum over faces of a_f b_f |diamond_f|.
double face_inner(const Mesh& mesh, const FaceField& a, const FaceField& b);

/// Normal derivative on every face. Boundary faces whose tag is in
/// `dirichlet` use `boundary` (indexed by face) as the outside value;
/// all other boundary faces get zero.
FaceField gradient(const Mesh& mesh, const CellField& u, const FaceField& boundary,
                   TagSet dirichlet);

/// Cellwise divergence of a normal face flux.
CellField divergence(const Mesh& mesh, const FaceField& flux);

/// Face-indexed vector holding `value_d1` on D1 faces, `value_d2` on D2 faces, zero elsewhere.
FaceField terminal_values(const Mesh& mesh, double value_d1, double value_d2);

}  // namespace memsim
