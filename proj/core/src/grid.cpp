#include "memsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace memsim {

namespace {

constexpr double kSegmentTol = 1e-12;

const char* edge_name(int e) {
  static const char* names[] = {"left", "right", "bottom", "top"};
  return names[e];
}

BoundaryTag tag_at(const std::vector<EdgeSegment>& segments, double t) {
  for (const auto& s : segments) {
    if (t >= s.begin && t < s.end) return s.tag;
  }
  return segments.back().tag;
}

}  // namespace

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::D1: return "D1";
    case BoundaryTag::D2: return "D2";
    case BoundaryTag::N: return "N";
    case BoundaryTag::Interior: break;
  }
  return "interior";
}

BoundaryTag parse_boundary_tag(std::string_view text) {
  if (text == "D1") return BoundaryTag::D1;
  if (text == "D2") return BoundaryTag::D2;
  if (text == "N") return BoundaryTag::N;
  throw ConfigError("unknown boundary label '" + std::string(text) + "' (expected D1, D2 or N)");
}

DomainSpec DomainSpec::rectangle(double length_x, double length_y) {
  DomainSpec spec;
  spec.length_x = length_x;
  spec.length_y = length_y;
  spec.edge(Edge::Left) = {{0.0, 1.0, BoundaryTag::D1}};
  spec.edge(Edge::Right) = {{0.0, 1.0, BoundaryTag::D2}};
  spec.edge(Edge::Bottom) = {{0.0, 1.0, BoundaryTag::N}};
  spec.edge(Edge::Top) = {{0.0, 1.0, BoundaryTag::N}};
  return spec;
}

double DomainSpec::tagged_length(BoundaryTag tag) const {
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    const double edge_len = (e < 2) ? length_y : length_x;
    for (const auto& s : layout[e]) {
      if (s.tag == tag) total += (s.end - s.begin) * edge_len;
    }
  }
  return total;
}

void DomainSpec::validate() const {
  if (!(length_x > 0.0) || !(length_y > 0.0)) {
    throw ConfigError("domain extents must be positive");
  }
  for (int e = 0; e < 4; ++e) {
    auto segs = layout[e];
    if (segs.empty()) {
      throw ConfigError(std::string("boundary edge '") + edge_name(e) + "' has no label");
    }
    std::sort(segs.begin(), segs.end(),
              [](const EdgeSegment& a, const EdgeSegment& b) { return a.begin < b.begin; });
    double cursor = 0.0;
    for (const auto& s : segs) {
      if (s.tag == BoundaryTag::Interior) {
        throw ConfigError(std::string("edge '") + edge_name(e) + "' carries an interior label");
      }
      if (!(s.end - s.begin > kSegmentTol)) {
        throw ConfigError(std::string("zero-measure segment on edge '") + edge_name(e) + "'");
      }
      if (std::abs(s.begin - cursor) > kSegmentTol) {
        throw ConfigError(std::string("segments on edge '") + edge_name(e) +
                          "' overlap or leave a gap");
      }
      cursor = s.end;
    }
    if (std::abs(cursor - 1.0) > kSegmentTol) {
      throw ConfigError(std::string("segments on edge '") + edge_name(e) +
                        "' do not cover the whole edge");
    }
  }
  if (!(tagged_length(BoundaryTag::D1) > 0.0)) {
    throw ConfigError("terminal D1 is empty");
  }
  if (!(tagged_length(BoundaryTag::D2) > 0.0)) {
    throw ConfigError("terminal D2 is empty");
  }
}

Mesh build_mesh(const DomainSpec& spec, int nx, int ny) {
  if (nx < 2 || ny < 2) {
    throw ConfigError("mesh needs at least 2 cells per direction");
  }
  spec.validate();

  Mesh mesh;
  mesh.nx_ = nx;
  mesh.ny_ = ny;
  mesh.hx_ = spec.length_x / nx;
  mesh.hy_ = spec.length_y / ny;
  const double hx = mesh.hx_;
  const double hy = mesh.hy_;

  auto& faces = mesh.faces_;
  faces.reserve(static_cast<std::size_t>(nx * (ny - 1) + (nx - 1) * ny + 2 * (nx + ny)));

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      Face f;
      f.owner = mesh.cell(i, j);
      f.neighbor = mesh.cell(i + 1, j);
      f.axis = Axis::X;
      f.length = hy;
      f.distance = hx;
      f.x = (i + 1) * hx;
      f.y = (j + 0.5) * hy;
      faces.push_back(f);
    }
  }
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      Face f;
      f.owner = mesh.cell(i, j);
      f.neighbor = mesh.cell(i, j + 1);
      f.axis = Axis::Y;
      f.length = hx;
      f.distance = hy;
      f.x = (i + 0.5) * hx;
      f.y = (j + 1) * hy;
      faces.push_back(f);
    }
  }
  mesh.first_boundary_ = static_cast<int>(faces.size());

  auto add_boundary = [&](Edge edge, int owner, double x, double y, double t) {
    Face f;
    f.owner = owner;
    const bool vertical_edge = (edge == Edge::Left || edge == Edge::Right);
    f.axis = vertical_edge ? Axis::X : Axis::Y;
    f.normal_sign = (edge == Edge::Left || edge == Edge::Bottom) ? -1.0 : 1.0;
    f.length = vertical_edge ? hy : hx;
    f.distance = vertical_edge ? 0.5 * hx : 0.5 * hy;
    f.x = x;
    f.y = y;
    f.tag = tag_at(spec.edge(edge), t);
    faces.push_back(f);
  };
  for (int j = 0; j < ny; ++j) {
    add_boundary(Edge::Left, mesh.cell(0, j), 0.0, (j + 0.5) * hy, (j + 0.5) / ny);
  }
  for (int j = 0; j < ny; ++j) {
    add_boundary(Edge::Right, mesh.cell(nx - 1, j), spec.length_x, (j + 0.5) * hy, (j + 0.5) / ny);
  }
  for (int i = 0; i < nx; ++i) {
    add_boundary(Edge::Bottom, mesh.cell(i, 0), (i + 0.5) * hx, 0.0, (i + 0.5) / nx);
  }
  for (int i = 0; i < nx; ++i) {
    add_boundary(Edge::Top, mesh.cell(i, ny - 1), (i + 0.5) * hx, spec.length_y, (i + 0.5) / nx);
  }

  if (mesh.count_tag(BoundaryTag::D1) == 0 || mesh.count_tag(BoundaryTag::D2) == 0) {
    throw ConfigError("a terminal is not resolved by the grid; refine nx/ny");
  }
  return mesh;
}

std::vector<int> Mesh::boundary_faces(BoundaryTag tag) const {
  std::vector<int> out;
  for (int f = first_boundary_; f < num_faces(); ++f) {
    if (faces_[static_cast<std::size_t>(f)].tag == tag) out.push_back(f);
  }
  return out;
}

std::size_t Mesh::count_tag(BoundaryTag tag) const {
  return static_cast<std::size_t>(
      std::count_if(faces_.begin() + first_boundary_, faces_.end(),
                    [tag](const Face& f) { return f.tag == tag; }));
}

double integrate_cells(const Mesh& mesh, const CellField& field) {
  if (field.size() != mesh.num_cells()) {
    throw ConfigError("cell field size does not match the mesh");
  }
  return field.sum() * mesh.cell_area();
}

double face_inner(const Mesh& mesh, const FaceField& a, const FaceField& b) {
  if (a.size() != mesh.num_faces() || b.size() != mesh.num_faces()) {
    throw ConfigError("face field size does not match the mesh");
  }
  double sum = 0.0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    sum += a[f] * b[f] * mesh.face(f).weight();
  }
  return sum;
}

FaceField gradient(const Mesh& mesh, const CellField& u, const FaceField& boundary,
                   TagSet dirichlet) {
  FaceField g = FaceField::Zero(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (!face.is_boundary()) {
      g[f] = (u[face.neighbor] - u[face.owner]) / face.distance;
    } else if (dirichlet.contains(face.tag)) {
      g[f] = (boundary[f] - u[face.owner]) / face.distance;
    }
  }
  return g;
}

CellField divergence(const Mesh& mesh, const FaceField& flux) {
  CellField div = CellField::Zero(mesh.num_cells());
  const double inv_area = 1.0 / mesh.cell_area();
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const double q = flux[f] * face.length * inv_area;
    div[face.owner] += q;
    if (!face.is_boundary()) div[face.neighbor] -= q;
  }
  return div;
}

FaceField terminal_values(const Mesh& mesh, double value_d1, double value_d2) {
  FaceField v = FaceField::Zero(mesh.num_faces());
  for (int f = mesh.first_boundary_face(); f < mesh.num_faces(); ++f) {
    const auto tag = mesh.face(f).tag;
    if (tag == BoundaryTag::D1) v[f] = value_d1;
    if (tag == BoundaryTag::D2) v[f] = value_d2;
  }
  return v;
}

}  // namespace memsim
