#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "hvc/common.hpp"
#include "hvc/imageio.hpp"

namespace testing {

namespace fs = std::filesystem;

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("hvc_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline hvc::RowMatrix gaussian_rows(hvc::Index rows, hvc::Index cols, hvc::Rng& rng, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    hvc::RowMatrix m(rows, cols);
    for (hvc::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

// Smooth random-texture image: white noise blurred by repeated 3x3 box
// averaging, so patches have natural-ish spatial correlation.
inline hvc::GrayImage smooth_noise_image(int w, int h, hvc::Rng& rng, int passes = 3) {
    hvc::GrayImage img{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : img.data) v = n(rng);
    for (int p = 0; p < passes; ++p) {
        hvc::GrayImage next = img;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0;
                int c = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = x + dx, yy = y + dy;
                        if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
                        s += img.at(xx, yy);
                        ++c;
                    }
                next.at(x, y) = s / c;
            }
        img = next;
    }
    return hvc::normalize(img);
}

}  // namespace testing
