#pragma once

#include <string>
#include <vector>

#include "memsim/grid.hpp"
#include "memsim/simulation.hpp"
#include "memsim/transport.hpp"

namespace memsim {

/// Column names of the time-series CSV for a network with m nodes,
/// n_L inductors and n_V voltage sources.
std::vector<std::string> csv_columns(int m, int n_L, int n_V);

/// Whole CSV document, numbers with 17 significant digits. Throws on empty history.
std::string format_csv(const History& history);

void write_csv(const std::string& path, const History& history);

/// Header `nx ny hx hy t`, then blocks n, p, D, V of ny rows with nx values each.
std::string format_fields(const Mesh& mesh, double t, const DeviceState& state,
                          const CellField& V);

void write_fields(const std::string& path, const Mesh& mesh, double t, const DeviceState& state,
                  const CellField& V);

/// fields_<step, zero padded to 6 digits>.txt
std::string field_file_name(int step);

}  // namespace memsim
