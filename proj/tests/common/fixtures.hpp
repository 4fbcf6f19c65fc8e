#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#ifndef STACKSENSE_FIXTURES
#error "STACKSENSE_FIXTURES must point at tests/fixtures"
#endif

inline std::string fixture_path(const std::string& name) { return std::string(STACKSENSE_FIXTURES) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}
