#pragma once

// Scenario files and result tables.
//
// Scenario files are flat `key = value` text: numbers, quoted strings,
// true/false, and bracketed arrays for sweep lists. `#` starts a comment.
// Unknown keys are rejected.

#include "fsdetect/harness.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fsd {

Scenario parse_scenario(const std::string &text);
Scenario load_scenario(const std::string &path);

/// Header row plus one line per result. Wall time is emitted only when
/// `with_timing` is set, keeping default output byte-reproducible.
void write_csv(std::ostream &os, const std::vector<ResultRow> &rows, bool with_timing = false);
void write_json(std::ostream &os, const Scenario &scenario, const std::vector<ResultRow> &rows,
                bool with_timing = false);

void write_crossing_csv(std::ostream &os, const std::vector<CrossingSample> &samples);

} // namespace fsd
