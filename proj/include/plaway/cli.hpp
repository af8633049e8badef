#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "plaway/pipeline.hpp"

namespace plaway::cli {

/// Exit codes: 0 success, 1 semantic failure or divergence, 2 usage error.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// The diff command on an already loaded entry.
int cmd_diff(const corpus::Entry& e, std::size_t trials, std::uint32_t seed, std::ostream& out, std::ostream& err);

/// Bench CSV: one row per grid point with simulator counts for both modes.
std::string bench_csv(const corpus::Entry& e, const pipeline::Compiled& c, const std::vector<std::int64_t>& grid);

/// Runs emitted SQL through `psql` against a live connection string and
/// returns the single result line.
std::string run_live(const std::string& sql, const std::string& dsn);

}  // namespace plaway::cli
