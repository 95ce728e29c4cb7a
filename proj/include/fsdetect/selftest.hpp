#pragma once

// Built-in invariant checks runnable from the CLI.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace fsd {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestReport {
    std::vector<SelftestCheck> checks;
    std::size_t passed() const;
    std::size_t failed() const;
};

/// Runs every check, printing one line per check to `log` when non-null.
SelftestReport run_selftest(std::ostream *log = nullptr);

} // namespace fsd
