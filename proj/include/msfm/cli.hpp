#pragma once

#include <iosfwd>

#include "msfm/config.hpp"

namespace msfm {

/// Runs the subcommand of `config`. Results go to the configured files, or to `out` when
/// no file is set; errors become one line on `err` and a nonzero status.
int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace msfm
