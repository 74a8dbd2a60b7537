#include "memsim/output.hpp"

#include <cstdio>
#include <fstream>

#include "memsim/errors.hpp"

namespace memsim {

namespace {

void append_real(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace

std::vector<std::string> csv_columns(int m, int n_L, int n_V) {
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= m; ++i) cols.push_back("u_" + std::to_string(i));
  for (int i = 1; i <= n_L; ++i) cols.push_back("iL_" + std::to_string(i));
  for (int i = 1; i <= n_V; ++i) cols.push_back("iV_" + std::to_string(i));
  for (const char* c : {"ID1", "ID2", "H_total", "H_internal", "H_electric", "H_network",
                        "diss_n", "diss_p", "diss_D", "mass_n", "mass_p", "mass_D", "min_n",
                        "min_p", "min_D", "max_n", "max_p", "max_D", "uD1", "uD2", "H_raw",
                        "lower_bound"}) {
    cols.emplace_back(c);
  }
  return cols;
}

std::string format_csv(const History& history) {
  if (history.rows.empty()) throw Error("cannot write an empty history");
  std::string out;
  const auto cols = csv_columns(history.m, history.n_L, history.n_V);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) out += ',';
    out += cols[i];
  }
  out += '\n';
  const int nx = history.m + history.n_L + history.n_V;
  for (const auto& r : history.rows) {
    append_real(out, r.t);
    for (int i = 0; i < nx; ++i) {
      out += ',';
      append_real(out, r.x[i]);
    }
    const double values[] = {r.I_D[0],         r.I_D[1],          r.energy.total,
                             r.energy.internal, r.energy.electric, r.energy.network,
                             r.dissipation[0],  r.dissipation[1],  r.dissipation[2],
                             r.mass[0],         r.mass[1],         r.mass[2],
                             r.minima[0],       r.minima[1],       r.minima[2],
                             r.maxima[0],       r.maxima[1],       r.maxima[2],
                             r.u_D[0],          r.u_D[1],          r.energy.raw,
                             r.lower_bound};
    for (double v : values) {
      out += ',';
      append_real(out, v);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const History& history) {
  write_text(path, format_csv(history));
}

std::string format_fields(const Mesh& mesh, double t, const DeviceState& state,
                          const CellField& V) {
  std::string out;
  out += std::to_string(mesh.nx()) + ' ' + std::to_string(mesh.ny()) + ' ';
  append_real(out, mesh.hx());
  out += ' ';
  append_real(out, mesh.hy());
  out += ' ';
  append_real(out, t);
  out += '\n';
  for (const CellField* field : {&state.n, &state.p, &state.D, &V}) {
    for (int j = 0; j < mesh.ny(); ++j) {
      for (int i = 0; i < mesh.nx(); ++i) {
        if (i > 0) out += ' ';
        append_real(out, (*field)[mesh.cell(i, j)]);
      }
      out += '\n';
    }
  }
  return out;
}

void write_fields(const std::string& path, const Mesh& mesh, double t, const DeviceState& state,
                  const CellField& V) {
  write_text(path, format_fields(mesh, t, state, V));
}

std::string field_file_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fields_%06d.txt", step);
  return buf;
}

}  // namespace memsim
