#pragma once

#include <string>
#include <string_view>

#include "memsim/network.hpp"

namespace memsim {

/// Line-based netlist grammar, whitespace separated, '#' starts a comment:
///
///   R <name> <n+> <n-> <resistance>
///   C <name> <n+> <n-> <capacitance>
///   L <name> <n+> <n-> <inductance>
///   V <name> <n+> <n-> DC <v> | SIN <amp> <freq> [<phase>]
///   I <name> <n+> <n-> DC <i> | SIN <amp> <freq> [<phase>]
///   M <name> <n+> <n-> device=<path>
///   .ic V(<node>) <value>
///   .ic I(<inductor or voltage source>) <value>
///
/// Node 0 is ground. Throws ParseError with 1-based line and column. Only
/// the grammar is checked here; validate_netlist() checks the topology.
Netlist parse_netlist(std::string_view text);

Netlist read_netlist_file(const std::string& path);

/// Prints in the grammar above with 17 significant digits.
std::string print_netlist(const Netlist& netlist);

/// Parses a real number using the C locale; returns false on trailing garbage.
bool parse_real(std::string_view text, double& out);

}  // namespace memsim
