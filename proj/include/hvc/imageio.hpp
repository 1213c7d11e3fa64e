#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hvc/common.hpp"

namespace hvc {

// Decoded Netpbm raster, intensities scaled to [0, 1], channels interleaved.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // row-major

    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// N patches of side x side pixels; each row is one patch flattened row-major.
struct PatchBatch {
    int side = 0;
    RowMatrix data;

    Index count() const { return data.rows(); }
    Index dim() const { return data.cols(); }
};

// Binary P5/P6 with maxval <= 255.
RawImage load_image(const std::filesystem::path& path);

// Writes an 8-bit binary PGM. `pixels` is row-major, width * height bytes.
void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& pixels);

// Rec. 601 luma for 3-channel input, identity for 1 channel.
GrayImage to_grayscale(const RawImage& img);

// 2x2 box average; a trailing odd row/column is dropped.
GrayImage downscale_half(const GrayImage& img);

// Zero mean, unit population variance.
GrayImage normalize(const GrayImage& img);

// grayscale -> downscale -> normalize.
GrayImage preprocess(const RawImage& img);

// `count` patches at uniformly drawn top-left corners (with replacement).
PatchBatch sample_patches(const GrayImage& img, int count, int side, Rng& rng);

// Extracts the side x side block whose top-left corner is (x, y).
Vector extract_patch(const GrayImage& img, int x, int y, int side);

// HVCR raster: "HVCR", u32 version, u64 width, u64 height, then width*height
// IEEE-754 binary64 little-endian values, row-major.
void write_raster(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_raster(const std::filesystem::path& path);

// Sorted list of *.pgm / *.ppm files (case-insensitive) in a directory.
std::vector<std::filesystem::path> list_netpbm(const std::filesystem::path& dir);

// Sorted list of *.hvcr files in a directory.
std::vector<std::filesystem::path> list_rasters(const std::filesystem::path& dir);

}  // namespace hvc
