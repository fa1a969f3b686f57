#pragma once

#include <stdexcept>
#include <string>

namespace memheat {

// Invalid configuration input (bad field values, schema violations).
// The message names the offending field.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: a precondition that is the caller's responsibility
// (mismatched grids, off-grid time queries, wrong kernel variant).
struct usage_error : std::logic_error {
    explicit usage_error(const std::string& msg) : std::logic_error(msg) {}
};

// Runtime numerical failure (singular step matrix, non-finite state).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace memheat
