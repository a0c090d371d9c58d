#pragma once

#include "logcost/cli.hpp"

#include <string>

namespace logcost::testing {

inline std::string fixture(const std::string& name) { return std::string(LOGCOST_FIXTURES) + "/" + name; }

inline Program load_fixture(const std::string& name) { return load_program(read_file(fixture(name))); }

inline CoefFile coef_fixture(const std::string& name) { return parse_coef(read_file(fixture(name))); }

inline Tactics tactic_fixture(const std::string& name) { return parse_tactics(read_file(fixture(name))); }

}  // namespace logcost::testing
