#include "sfcl/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sfcl::pgm {

namespace {

// Next whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    while (in) {
        const int c = in.get();
        if (c == EOF) break;
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

Gray8 read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("pgm: cannot open " + path);
    if (next_token(in) != "P5") throw Error("pgm: not a binary PGM: " + path);
    Gray8 g;
    try {
        g.width = std::stoi(next_token(in));
        g.height = std::stoi(next_token(in));
        const int maxval = std::stoi(next_token(in));
        if (maxval != 255) throw Error("pgm: only maxval 255 supported: " + path);
    } catch (const std::logic_error&) {
        throw Error("pgm: malformed header: " + path);
    }
    if (g.width < 1 || g.height < 1) throw Error("pgm: bad dimensions: " + path);
    g.v.resize(static_cast<size_t>(g.width) * g.height);
    in.read(reinterpret_cast<char*>(g.v.data()), static_cast<std::streamsize>(g.v.size()));
    if (in.gcount() != static_cast<std::streamsize>(g.v.size()))
        throw Error("pgm: truncated pixel data: " + path);
    return g;
}

void write(const std::string& path, const Gray8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("pgm: cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.v.data()),
              static_cast<std::streamsize>(img.v.size()));
    if (!out) throw Error("pgm: write failed: " + path);
}

void write_image(const std::string& path, const ScalarField& f) {
    Gray8 g;
    g.height = f.height;
    g.width = f.width;
    g.v.resize(f.size());
    for (size_t i = 0; i < f.v.size(); ++i) {
        const double x = std::clamp(f.v[i], 0.0, 1.0);
        g.v[i] = static_cast<std::uint8_t>(std::lround(x * 255.0));
    }
    write(path, g);
}

void write_label(const std::string& path, const LabelMask& label) {
    Gray8 g;
    g.height = label.height;
    g.width = label.width;
    g.v = label.v;
    write(path, g);
}

ScalarField to_image(const Gray8& g) {
    ScalarField f(g.height, g.width);
    for (size_t i = 0; i < g.v.size(); ++i) f.v[i] = g.v[i] / 255.0;
    return f;
}

LabelMask to_label(const Gray8& g, int num_classes) {
    LabelMask l(g.height, g.width, num_classes, 0);
    l.v = g.v;
    for (auto v : l.v)
        if (v >= num_classes)
            throw Error("pgm: gray level " + std::to_string(v) +
                        " exceeds class count");
    return l;
}

}  // namespace sfcl::pgm
