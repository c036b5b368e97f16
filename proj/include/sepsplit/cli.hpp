#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sepsplit {

// "start:stop:count[:geom|lin]". Geometric grids are returned strictly
// decreasing in ε; linear grids keep the given order.
std::vector<double> parse_eps_grid(const std::string& spec);

// Entry point of the `sepsplit` tool. args excludes the program name.
// Exit status: 0 success, 2 validation failure, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sepsplit
