#include "synthstab/image.hpp"

#include "synthstab/errors.hpp"
#include "synthstab/textio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace synthstab {

namespace {

inline float lerp_exact(float a, float b, double t) {
    return t == 0.0 ? a : static_cast<float>(a + t * (static_cast<double>(b) - a));
}

float bilinear_unchecked(const Frame& f, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0;
    double fy = y - y0;
    if (x0 >= f.width - 1) {
        x0 = f.width - 1;
        fx = 0.0;
    }
    if (y0 >= f.height - 1) {
        y0 = f.height - 1;
        fy = 0.0;
    }
    const float v00 = f.at(x0, y0);
    const float top = fx == 0.0 ? v00 : lerp_exact(v00, f.at(x0 + 1, y0), fx);
    if (fy == 0.0) return top;
    const float v01 = f.at(x0, y0 + 1);
    const float bottom = fx == 0.0 ? v01 : lerp_exact(v01, f.at(x0 + 1, y0 + 1), fx);
    return lerp_exact(top, bottom, fy);
}

}  // namespace

float sample_bilinear(const Frame& f, double x, double y, float fill, bool* inside) {
    const bool in = !f.empty() && inside_grid(x, y, f.width, f.height);
    if (inside) *inside = in;
    if (!in) return fill;
    return bilinear_unchecked(f, x, y);
}

float sample_bilinear_clamped(const Frame& f, double x, double y) {
    return bilinear_unchecked(f, x, y);
}

void quantize(Frame& f) {
    for (float& v : f.pixels) v = std::clamp(std::nearbyint(v), 0.0f, 255.0f);
}

Frame downsample2(const Frame& f) {
    Frame out(f.width / 2, f.height / 2);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            out.at(x, y) = 0.25f * (f.at(2 * x, 2 * y) + f.at(2 * x + 1, 2 * y) +
                                    f.at(2 * x, 2 * y + 1) + f.at(2 * x + 1, 2 * y + 1));
        }
    }
    return out;
}

Frame sub_image(const Frame& f, int x0, int y0, int w, int h) {
    Frame out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(x, y) = f.at(x0 + x, y0 + y);
    }
    return out;
}

CropRect centered_crop(int width, int height, double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidSpec("crop ratio must be in (0, 1]");
    if (ratio == 1.0) return {0, 0, width, height};
    const auto side = [ratio](int extent) {
        int v = static_cast<int>(std::floor(ratio * extent + 1e-9));
        v -= v % 2;
        return std::max(v, std::min(extent, 2));
    };
    CropRect r;
    r.width = side(width);
    r.height = side(height);
    r.x0 = (width - r.width) / 2;
    r.y0 = (height - r.height) / 2;
    return r;
}

Frame center_square(const Frame& f, int side, double* scale_out) {
    const int crop = std::min(f.width, f.height);
    const double ox = (f.width - crop) * 0.5;
    const double oy = (f.height - crop) * 0.5;
    const double step = static_cast<double>(crop) / side;
    if (scale_out) *scale_out = static_cast<double>(side) / crop;
    Frame out(side, side);
    for (int y = 0; y < side; ++y) {
        const double sy = (y + 0.5) * step - 0.5 + oy;
        for (int x = 0; x < side; ++x) {
            const double sx = (x + 0.5) * step - 0.5 + ox;
            out.at(x, y) = sample_bilinear_clamped(f, sx, sy);
        }
    }
    return out;
}

void write_pgm(const std::string& path, const Frame& f) {
    std::string data = "P5\n" + std::to_string(f.width) + ' ' + std::to_string(f.height) + "\n255\n";
    const std::size_t header = data.size();
    data.resize(header + f.pixels.size());
    std::transform(f.pixels.begin(), f.pixels.end(), data.begin() + static_cast<std::ptrdiff_t>(header),
                   [](float v) {
                       return static_cast<char>(static_cast<unsigned char>(std::clamp(std::nearbyint(v), 0.0f, 255.0f)));
                   });
    write_file_atomic(path, data);
}

namespace {

int read_header_int(std::istream& in, const std::string& path) {
    int c = in.peek();
    while (in && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
        } else {
            in.get();
        }
        c = in.peek();
    }
    int value = -1;
    if (!(in >> value)) throw IoFailure("malformed PGM header in '" + path + "'");
    return value;
}

}  // namespace

Frame read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open '" + path + "'");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5') throw IoFailure("'" + path + "' is not a binary PGM");
    const int w = read_header_int(in, path);
    const int h = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw IoFailure("unsupported PGM geometry in '" + path + "'");
    }
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw IoFailure("truncated pixel data in '" + path + "'");
    }
    Frame f(w, h);
    std::transform(bytes.begin(), bytes.end(), f.pixels.begin(),
                   [](unsigned char b) { return static_cast<float>(b); });
    return f;
}

}  // namespace synthstab
