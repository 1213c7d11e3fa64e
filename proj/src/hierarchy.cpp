#include "hvc/hierarchy.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hvc/binary_io.hpp"
#include "hvc/parallel.hpp"

namespace hvc {

PipelineConfig PipelineConfig::paper() { return {}; }

PipelineConfig PipelineConfig::desk() {
    PipelineConfig c;
    c.spca1_dim = 64;
    c.ica1_dim = 128;
    c.spca2_dim = 64;
    c.ica2_dim = 128;
    c.epochs_spca1 = c.epochs_ica1 = c.epochs_spca2 = c.epochs_ica2 = 5000;
    return c;
}

void PipelineConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw ShapeError(std::string("config: ") + what);
    };
    check(layer1_patch >= 1, "layer1_patch must be >= 1");
    check(layer2_patch == 2 * layer1_patch, "layer2_patch must equal 2 * layer1_patch");
    check(spca1_dim >= 1 && spca1_dim <= layer1_dim(), "spca1_dim must be in [1, layer1_patch^2]");
    check(ica1_dim >= spca1_dim, "ica1_dim must be >= spca1_dim");
    check(spca2_dim >= 1 && spca2_dim <= layer2_input_dim(), "spca2_dim must be in [1, 4 * ica1_dim]");
    check(ica2_dim >= spca2_dim, "ica2_dim must be >= spca2_dim");
    check(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda_ica1 >= 0.0 && lambda_ica2 >= 0.0,
          "lambdas must be >= 0");
    check(epochs_spca1 >= 1 && epochs_ica1 >= 1 && epochs_spca2 >= 1 && epochs_ica2 >= 1, "epochs must be >= 1");
    check(batch >= 1, "batch must be >= 1");
    check(lr_ica > 0.0 && lr_spca > 0.0, "learning rates must be > 0");
    check(gauss_samples >= 2, "gauss_samples must be >= 2");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw IoError("config: bad value for " + key + ": '" + text + "'");
    return v;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

PipelineConfig parse_config(std::istream& in, PipelineConfig c) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "layer1_patch") c.layer1_patch = parse_number<int>(key, val);
        else if (key == "layer2_patch") c.layer2_patch = parse_number<int>(key, val);
        else if (key == "spca1_dim") c.spca1_dim = parse_number<Index>(key, val);
        else if (key == "ica1_dim") c.ica1_dim = parse_number<Index>(key, val);
        else if (key == "spca2_dim") c.spca2_dim = parse_number<Index>(key, val);
        else if (key == "ica2_dim") c.ica2_dim = parse_number<Index>(key, val);
        else if (key == "lambda1") c.lambda1 = parse_number<double>(key, val);
        else if (key == "lambda2") c.lambda2 = parse_number<double>(key, val);
        else if (key == "lambda_ica1") c.lambda_ica1 = parse_number<double>(key, val);
        else if (key == "lambda_ica2") c.lambda_ica2 = parse_number<double>(key, val);
        else if (key == "penalty") {
            try {
                c.penalty = sparsecode::penalty_from_string(val);
            } catch (const Error& e) {
                throw IoError(std::string("config: ") + e.what());
            }
        } else if (key == "epochs_spca1") c.epochs_spca1 = parse_number<int>(key, val);
        else if (key == "epochs_ica1") c.epochs_ica1 = parse_number<int>(key, val);
        else if (key == "epochs_spca2") c.epochs_spca2 = parse_number<int>(key, val);
        else if (key == "epochs_ica2") c.epochs_ica2 = parse_number<int>(key, val);
        else if (key == "batch") c.batch = parse_number<int>(key, val);
        else if (key == "lr_ica") c.lr_ica = parse_number<double>(key, val);
        else if (key == "lr_spca") c.lr_spca = parse_number<double>(key, val);
        else if (key == "gauss_samples") c.gauss_samples = parse_number<int>(key, val);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, val);
        else throw IoError("config: unknown key '" + key + "'");
    }
    return c;
}

PipelineConfig read_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_config(in, base);
}

std::string format_config(const PipelineConfig& c) {
    std::ostringstream out;
    out << "layer1_patch = " << c.layer1_patch << '\n'
        << "layer2_patch = " << c.layer2_patch << '\n'
        << "spca1_dim = " << c.spca1_dim << '\n'
        << "ica1_dim = " << c.ica1_dim << '\n'
        << "spca2_dim = " << c.spca2_dim << '\n'
        << "ica2_dim = " << c.ica2_dim << '\n'
        << "lambda1 = " << format_double(c.lambda1) << '\n'
        << "lambda2 = " << format_double(c.lambda2) << '\n'
        << "lambda_ica1 = " << format_double(c.lambda_ica1) << '\n'
        << "lambda_ica2 = " << format_double(c.lambda_ica2) << '\n'
        << "penalty = " << sparsecode::to_string(c.penalty) << '\n'
        << "epochs_spca1 = " << c.epochs_spca1 << '\n'
        << "epochs_ica1 = " << c.epochs_ica1 << '\n'
        << "epochs_spca2 = " << c.epochs_spca2 << '\n'
        << "epochs_ica2 = " << c.epochs_ica2 << '\n'
        << "batch = " << c.batch << '\n'
        << "lr_ica = " << format_double(c.lr_ica) << '\n'
        << "lr_spca = " << format_double(c.lr_spca) << '\n'
        << "gauss_samples = " << c.gauss_samples << '\n'
        << "seed = " << c.seed << '\n';
    return out.str();
}

void HierarchicalModel::validate() const {
    config.validate();
    const auto& c = config;
    auto check = [](bool ok, const std::string& what) {
        if (!ok) throw ShapeError("dimension chain: " + what);
    };
    check(spca1.input_dim() == c.layer1_dim() && spca1.output_dim() == c.spca1_dim,
          "spca1 must be " + std::to_string(c.layer1_dim()) + " -> " + std::to_string(c.spca1_dim));
    check(ica1.input_dim() == spca1.output_dim() && ica1.output_dim() == c.ica1_dim,
          "ica1 must be " + std::to_string(spca1.output_dim()) + " -> " + std::to_string(c.ica1_dim));
    check(gauss1.dims() == ica1.output_dim(), "gauss1 must have " + std::to_string(c.ica1_dim) + " tables");
    check(spca2.input_dim() == 4 * ica1.output_dim() && spca2.output_dim() == c.spca2_dim,
          "spca2 must be " + std::to_string(4 * c.ica1_dim) + " -> " + std::to_string(c.spca2_dim));
    check(ica2.input_dim() == spca2.output_dim() && ica2.output_dim() == c.ica2_dim,
          "ica2 must be " + std::to_string(spca2.output_dim()) + " -> " + std::to_string(c.ica2_dim));
    check(gauss2.dims() == ica2.output_dim(), "gauss2 must have " + std::to_string(c.ica2_dim) + " tables");
    auto corr_ok = [](const spca::SpcaModel& m) {
        return m.correlation.size() == 0 ||
               (m.correlation.rows() == m.input_dim() && m.correlation.cols() == m.input_dim());
    };
    check(corr_ok(spca1) && corr_ok(spca2), "cached correlation has the wrong size");
}

Vector forward_layer1(const HierarchicalModel& model, const Vector& patch) {
    require_shape(patch.size() == model.spca1.input_dim(), "forward_layer1: patch dim mismatch");
    return sparsecode::respond(model.ica1, spca::infer(model.spca1, patch));
}

RowMatrix forward_layer1_batch(const HierarchicalModel& model, const RowMatrix& patches) {
    require_shape(patches.cols() == model.spca1.input_dim(), "forward_layer1: patch dim mismatch");
    return sparsecode::respond_batch(model.ica1, spca::infer_batch(model.spca1, patches));
}

RowMatrix assemble_quadrants_batch(const HierarchicalModel& model, const RowMatrix& patches32) {
    const int P = model.config.layer1_patch;
    const int P2 = 2 * P;
    require_shape(patches32.cols() == static_cast<Index>(P2) * P2, "assemble_quadrants: patch dim mismatch");
    const Index n = patches32.rows();
    const Index K = model.ica1.output_dim();

    // Quadrant q of row i becomes row q * n + i of one stacked batch.
    RowMatrix tiles(4 * n, static_cast<Index>(P) * P);
    for (int q = 0; q < 4; ++q) {
        const int ox = (q % 2) * P;
        const int oy = (q / 2) * P;
        for (Index i = 0; i < n; ++i)
            for (int y = 0; y < P; ++y)
                tiles.row(q * n + i).segment(static_cast<Index>(y) * P, P) =
                    patches32.row(i).segment(static_cast<Index>(oy + y) * P2 + ox, P);
    }
    const RowMatrix g = model.gauss1.transform_batch(forward_layer1_batch(model, tiles));
    RowMatrix out(n, 4 * K);
    for (int q = 0; q < 4; ++q) out.middleCols(q * K, K) = g.middleRows(q * n, n);
    return out;
}

Vector assemble_quadrants(const HierarchicalModel& model, const Vector& patch32) {
    return assemble_quadrants_batch(model, patch32.transpose()).row(0).transpose();
}

RowMatrix forward_batch(const HierarchicalModel& model, const RowMatrix& patches32) {
    const RowMatrix codes = spca::infer_batch(model.spca2, assemble_quadrants_batch(model, patches32));
    return sparsecode::respond_batch(model.ica2, codes);
}

Vector forward(const HierarchicalModel& model, const Vector& patch32) {
    return forward_batch(model, patch32.transpose()).row(0).transpose();
}

const char* to_string(Stage s) {
    switch (s) {
        case Stage::Spca1: return "spca1";
        case Stage::Ica1: return "ica1";
        case Stage::Gauss1: return "gauss1";
        case Stage::Spca2: return "spca2";
        case Stage::Ica2: return "ica2";
        case Stage::Gauss2: return "gauss2";
    }
    return "?";
}

namespace {

RowMatrix draw_patches(const std::vector<GrayImage>& images, int count, int side, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, images.size() - 1);
    const GrayImage& img = images[pick(rng)];
    return sample_patches(img, count, side, rng).data;
}

// `total` rows produced `batch` at a time through `map`.
RowMatrix sweep(const std::function<RowMatrix(Rng&, int)>& draw, int total, int batch, Rng& rng) {
    RowMatrix out;
    Index filled = 0;
    while (filled < total) {
        const int n = std::min(batch, total - static_cast<int>(filled));
        const RowMatrix block = draw(rng, n);
        if (out.size() == 0) out.resize(total, block.cols());
        out.middleRows(filled, n) = block;
        filled += n;
    }
    return out;
}

}  // namespace

HierarchicalModel train_pipeline(const std::vector<GrayImage>& images, const PipelineConfig& config, Rng& rng,
                                 const ProgressObserver& observer) {
    config.validate();
    if (images.empty()) throw DegenerateInput("train_pipeline: empty dataset");
    for (const auto& img : images)
        if (img.width < config.layer2_patch || img.height < config.layer2_patch)
            throw DegenerateInput("train_pipeline: image smaller than the layer-2 patch");

    const int P1 = config.layer1_patch;
    const int P2 = config.layer2_patch;
    HierarchicalModel model;
    model.config = config;

    auto report = [&](Stage stage) {
        return [&observer, stage](const auto& s) {
            if (observer) observer({stage, s.epoch, s.objective, s.max_second_moment});
        };
    };

    auto layer1_patches = [&](Rng& r, int n) { return draw_patches(images, n, P1, r); };
    auto layer2_patches = [&](Rng& r, int n) { return draw_patches(images, n, P2, r); };

    spca::TrainOptions so1;
    so1.output_dim = config.spca1_dim;
    so1.lambda = config.lambda1;
    so1.epochs = config.epochs_spca1;
    so1.learning_rate = config.lr_spca;
    model.spca1 = spca::train([&](Rng& r) { return layer1_patches(r, config.batch); }, config.layer1_dim(), so1,
                              rng, report(Stage::Spca1));

    // ica1 learns from the same spca1 codes forward_layer1 feeds it.
    sparsecode::TrainOptions io1;
    io1.output_dim = config.ica1_dim;
    io1.lambda = config.lambda_ica1;
    io1.penalty = config.penalty;
    io1.epochs = config.epochs_ica1;
    io1.learning_rate = config.lr_ica;
    model.ica1 = sparsecode::train(
        [&](Rng& r) { return spca::infer_batch(model.spca1, layer1_patches(r, config.batch)); },
        config.spca1_dim, io1, rng, report(Stage::Ica1));

    model.gauss1 = Gaussianizer::fit(sweep(
        [&](Rng& r, int n) { return forward_layer1_batch(model, layer1_patches(r, n)); }, config.gauss_samples,
        config.batch, rng));
    if (observer) observer({Stage::Gauss1, 0, 0.0, 0.0});

    spca::TrainOptions so2;
    so2.output_dim = config.spca2_dim;
    so2.lambda = config.lambda2;
    so2.epochs = config.epochs_spca2;
    so2.learning_rate = config.lr_spca;
    model.spca2 = spca::train([&](Rng& r) { return assemble_quadrants_batch(model, layer2_patches(r, config.batch)); },
                              config.layer2_input_dim(), so2, rng, report(Stage::Spca2));

    sparsecode::TrainOptions io2 = io1;
    io2.output_dim = config.ica2_dim;
    io2.lambda = config.lambda_ica2;
    io2.epochs = config.epochs_ica2;
    model.ica2 = sparsecode::train(
        [&](Rng& r) {
            return spca::infer_batch(model.spca2, assemble_quadrants_batch(model, layer2_patches(r, config.batch)));
        },
        config.spca2_dim, io2, rng, report(Stage::Ica2));

    model.gauss2 = Gaussianizer::fit(sweep(
        [&](Rng& r, int n) { return forward_batch(model, layer2_patches(r, n)); }, config.gauss_samples,
        config.batch, rng));
    if (observer) observer({Stage::Gauss2, 0, 0.0, 0.0});

    model.validate();
    return model;
}

namespace {

constexpr char kMagic[4] = {'H', 'V', 'C', '1'};

template <typename Derived>
void write_matrix(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
    const RowMatrix rm = m;
    binary::write_u64(out, static_cast<std::uint64_t>(rm.rows()));
    binary::write_u64(out, static_cast<std::uint64_t>(rm.cols()));
    binary::write_f64(out, rm.data(), static_cast<std::size_t>(rm.size()));
}

RowMatrix read_matrix(std::istream& in, const char* what) {
    const std::uint64_t rows = binary::read_u64(in, what);
    const std::uint64_t cols = binary::read_u64(in, what);
    constexpr std::uint64_t kLimit = std::uint64_t{1} << 28;
    if (rows > kLimit || cols > kLimit || (rows && cols > kLimit / rows))
        throw IoError(std::string("implausible matrix size for ") + what);
    RowMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    binary::read_exact(in, m.data(), static_cast<std::size_t>(rows * cols) * sizeof(double), what);
    return m;
}

}  // namespace

void save(const HierarchicalModel& model, const std::filesystem::path& path) {
    model.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof kMagic);
    binary::write_u32(out, kModelVersion);
    const std::string cfg = format_config(model.config);
    binary::write_u64(out, cfg.size());
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_matrix(out, model.spca1.decoder);
    write_matrix(out, model.spca1.correlation);
    write_matrix(out, model.ica1.basis);
    write_matrix(out, model.gauss1.tables());
    write_matrix(out, model.spca2.decoder);
    write_matrix(out, model.spca2.correlation);
    write_matrix(out, model.ica2.basis);
    write_matrix(out, model.gauss2.tables());
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

HierarchicalModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    binary::read_exact(in, magic, sizeof magic, "magic");
    if (!std::equal(magic, magic + 4, kMagic)) throw IoError("bad magic: not an HVC1 model file");
    const std::uint32_t version = binary::read_u32(in, "version");
    if (version != kModelVersion) throw IoError("unsupported model version " + std::to_string(version));
    const std::uint64_t cfg_len = binary::read_u64(in, "config length");
    if (cfg_len > (1u << 20)) throw IoError("implausible config block length");
    std::string cfg(cfg_len, '\0');
    binary::read_exact(in, cfg.data(), cfg.size(), "config");
    std::istringstream cfg_in(cfg);

    HierarchicalModel m;
    m.config = parse_config(cfg_in);
    m.spca1 = {read_matrix(in, "spca1 decoder"), m.config.lambda1, read_matrix(in, "spca1 correlation")};
    m.ica1 = {read_matrix(in, "ica1 basis"), m.config.lambda_ica1, m.config.penalty};
    m.gauss1 = Gaussianizer::from_tables(read_matrix(in, "gauss1 tables"));
    m.spca2 = {read_matrix(in, "spca2 decoder"), m.config.lambda2, read_matrix(in, "spca2 correlation")};
    m.ica2 = {read_matrix(in, "ica2 basis"), m.config.lambda_ica2, m.config.penalty};
    m.gauss2 = Gaussianizer::from_tables(read_matrix(in, "gauss2 tables"));
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes after model payload");
    m.validate();
    return m;
}

}  // namespace hvc
