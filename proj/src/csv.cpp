#include "sfcl/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sfcl/core.hpp"

namespace sfcl::csv {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::vector<std::string>> read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("csv: cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace sfcl::csv
