#pragma once

#include <string>
#include <vector>

namespace sfcl::csv {

// %.17g: shortest formatting that round-trips doubles exactly, so CSV
// rewrites are byte-stable and re-parses are lossless.
std::string fmt(double x);

std::vector<std::vector<std::string>> read(const std::string& path);

}  // namespace sfcl::csv
