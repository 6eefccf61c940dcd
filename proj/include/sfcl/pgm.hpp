#pragma once

#include <string>

#include "sfcl/core.hpp"

// Binary PGM (P5, maxval 255). Labels store the class index as the gray
// level; images map [0,1] to [0,255] with clamping.

namespace sfcl::pgm {

struct Gray8 {
    int height = 0, width = 0;
    std::vector<std::uint8_t> v;
};

Gray8 read(const std::string& path);
void write(const std::string& path, const Gray8& img);

void write_image(const std::string& path, const ScalarField& f);
void write_label(const std::string& path, const LabelMask& label);

ScalarField to_image(const Gray8& g);                 // gray / 255
LabelMask to_label(const Gray8& g, int num_classes);  // gray = class index

}  // namespace sfcl::pgm
