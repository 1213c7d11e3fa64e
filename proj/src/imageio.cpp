#include "hvc/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "hvc/binary_io.hpp"

namespace hvc {

namespace fs = std::filesystem;

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
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

int header_int(std::istream& in, const fs::path& path, const char* field) {
    const std::string tok = header_token(in);
    int v = 0;
    try {
        std::size_t used = 0;
        v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
        throw IoError(path.string() + ": bad header field " + field + " '" + tok + "'");
    }
    return v;
}

std::string lower_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

void require_finite(const GrayImage& img, const char* what) {
    if (!std::all_of(img.data.begin(), img.data.end(), [](double v) { return std::isfinite(v); }))
        throw DegenerateInput(std::string(what) + ": non-finite pixel");
}

}  // namespace

RawImage load_image(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    const std::string magic = header_token(in);
    int channels = 0;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw IoError(path.string() + ": bad magic '" + magic + "' (expected P5 or P6)");

    RawImage img;
    img.channels = channels;
    img.width = header_int(in, path, "width");
    img.height = header_int(in, path, "height");
    const int maxval = header_int(in, path, "maxval");
    if (img.width <= 0 || img.height <= 0) throw IoError(path.string() + ": non-positive dimensions");
    if (maxval <= 0 || maxval > 255) throw IoError(path.string() + ": unsupported maxval " + std::to_string(maxval));

    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * channels;
    std::vector<unsigned char> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw IoError(path.string() + ": payload shorter than header dimensions");
    in.peek();
    if (!in.eof()) throw IoError(path.string() + ": trailing bytes after payload");

    img.data.resize(n);
    const double scale = 1.0 / maxval;
    for (std::size_t i = 0; i < n; ++i) img.data[i] = bytes[i] * scale;
    return img;
}

void write_pgm(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& pixels) {
    require_shape(pixels.size() == static_cast<std::size_t>(width) * height, "write_pgm: pixel count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

GrayImage to_grayscale(const RawImage& img) {
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    require_shape(img.data.size() == n * static_cast<std::size_t>(img.channels), "to_grayscale: data length");
    GrayImage out{img.width, img.height, {}};
    if (img.channels == 1) {
        out.data = img.data;
        return out;
    }
    if (img.channels != 3) throw ShapeError("to_grayscale: unsupported channel count " + std::to_string(img.channels));
    out.data.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] + 0.114 * img.data[3 * i + 2];
    return out;
}

GrayImage downscale_half(const GrayImage& img) {
    if (img.width < 2 || img.height < 2) throw DegenerateInput("downscale_half: image smaller than 2x2");
    GrayImage out{img.width / 2, img.height / 2, {}};
    out.data.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = 0.25 * (img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) + img.at(2 * x, 2 * y + 1) +
                                   img.at(2 * x + 1, 2 * y + 1));
    return out;
}

GrayImage normalize(const GrayImage& img) {
    const std::size_t n = img.data.size();
    if (n < 2) throw DegenerateInput("normalize: need at least two pixels");
    require_finite(img, "normalize");
    double mean = 0.0;
    for (double v : img.data) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : img.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    if (!(var > 0.0)) throw DegenerateInput("normalize: constant image (zero variance)");

    const double inv_std = 1.0 / std::sqrt(var);
    GrayImage out = img;
    for (double& v : out.data) v = (v - mean) * inv_std;
    return out;
}

GrayImage preprocess(const RawImage& img) { return normalize(downscale_half(to_grayscale(img))); }

Vector extract_patch(const GrayImage& img, int x, int y, int side) {
    require_shape(x >= 0 && y >= 0 && x + side <= img.width && y + side <= img.height, "extract_patch: out of bounds");
    Vector p(static_cast<Index>(side) * side);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) p[r * side + c] = img.at(x + c, y + r);
    return p;
}

PatchBatch sample_patches(const GrayImage& img, int count, int side, Rng& rng) {
    if (count < 1) throw ShapeError("sample_patches: count must be >= 1");
    if (side < 1 || side > std::min(img.width, img.height))
        throw ShapeError("sample_patches: patch larger than image");
    std::uniform_int_distribution<int> xs(0, img.width - side);
    std::uniform_int_distribution<int> ys(0, img.height - side);
    PatchBatch batch{side, RowMatrix(count, static_cast<Index>(side) * side)};
    for (int i = 0; i < count; ++i) {
        const int x = xs(rng);
        const int y = ys(rng);
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) batch.data(i, r * side + c) = img.at(x + c, y + r);
    }
    return batch;
}

void write_raster(const fs::path& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write("HVCR", 4);
    binary::write_u32(out, 1);
    binary::write_u64(out, static_cast<std::uint64_t>(img.width));
    binary::write_u64(out, static_cast<std::uint64_t>(img.height));
    binary::write_f64(out, img.data.data(), img.data.size());
    if (!out) throw IoError("write failed: " + path.string());
}

GrayImage read_raster(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    binary::read_exact(in, magic, 4, "HVCR magic");
    if (std::string(magic, 4) != "HVCR") throw IoError(path.string() + ": bad magic");
    if (const auto v = binary::read_u32(in, "HVCR version"); v != 1)
        throw IoError(path.string() + ": unsupported HVCR version " + std::to_string(v));
    const auto w = binary::read_u64(in, "HVCR width");
    const auto h = binary::read_u64(in, "HVCR height");
    if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) throw IoError(path.string() + ": bad dimensions");
    GrayImage img{static_cast<int>(w), static_cast<int>(h), std::vector<double>(w * h)};
    binary::read_exact(in, img.data.data(), img.data.size() * sizeof(double), "HVCR data");
    return img;
}

std::vector<fs::path> list_netpbm(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = lower_ext(e.path());
        if (ext == ".pgm" || ext == ".ppm") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<fs::path> list_rasters(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && lower_ext(e.path()) == ".hvcr") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace hvc
