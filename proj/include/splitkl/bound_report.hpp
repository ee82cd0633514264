#pragma once

#include <map>
#include <string>

namespace splitkl {

/// A computed bound together with the parameters that produced it.
struct BoundReport {
  std::string name;
  double value = 0.0;
  double delta = 0.0;
  std::map<std::string, double> params;
};

}  // namespace splitkl
