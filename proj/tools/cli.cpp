#include "hvc/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "hvc/analysis.hpp"
#include "hvc/hierarchy.hpp"
#include "hvc/imageio.hpp"
#include "hvc/parallel.hpp"

namespace hvc {

namespace fs = std::filesystem;

namespace {

struct Options {
    // preprocess
    std::string in_dir;
    // train
    std::string config_path;
    std::uint64_t seed = 0;
    std::string preset = "desk";
    std::string data_dir;
    int log_every = 10;
    bool dry_run = false;
    // analyze / render / info
    std::string model_path;
    std::string what;
    std::vector<Index> units;
    std::string stage = "ica2";
    Index stc_samples = 0;
    std::uint64_t analysis_seed = 1;
    std::string out_dir;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    return f;
}

int cmd_preprocess(const Options& o, std::ostream& out) {
    if (!fs::is_directory(o.in_dir)) throw IoError("input directory not found: " + o.in_dir);
    const auto files = list_netpbm(o.in_dir);
    if (files.empty()) throw IoError("no PGM/PPM images in " + o.in_dir);
    ensure_dir(o.out_dir);
    out << "image,width,height,mean,variance\n";
    for (const auto& path : files) {
        const GrayImage img = preprocess(load_image(path));
        const fs::path target = fs::path(o.out_dir) / (path.stem().string() + ".hvcr");
        write_raster(target, img);
        const Eigen::Map<const Vector> v(img.data.data(), static_cast<Index>(img.data.size()));
        const double mean = v.mean();
        const double var = (v.array() - mean).square().mean();
        out << path.filename().string() << ',' << img.width << ',' << img.height << ',' << fmt(mean) << ','
            << fmt(var) << '\n';
    }
    return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
    PipelineConfig config = o.preset == "paper" ? PipelineConfig::paper() : PipelineConfig::desk();
    if (!o.config_path.empty()) config = read_config(o.config_path, config);
    config.seed = o.seed;
    config.validate();
    const std::string header = "# preset = " + o.preset + "\n" + [&] {
        std::string h;
        std::istringstream cfg(format_config(config));
        for (std::string line; std::getline(cfg, line);) h += "# " + line + "\n";
        return h;
    }();
    if (o.dry_run) {
        out << header;
        return kExitOk;
    }

    if (o.data_dir.empty() || o.out_dir.empty()) throw IoError("train needs --data and --out");
    if (!fs::is_directory(o.data_dir)) throw IoError("data directory not found: " + o.data_dir);
    const auto rasters = list_rasters(o.data_dir);
    if (rasters.empty()) throw IoError("no .hvcr rasters in " + o.data_dir + " (run preprocess first)");
    std::vector<GrayImage> images;
    for (const auto& p : rasters) images.push_back(read_raster(p));

    ensure_dir(o.out_dir);
    const fs::path log_path = fs::path(o.out_dir) / "train_log.csv";
    std::ofstream log = open_out(log_path);
    log << header << "stage,epoch,objective,max_second_moment\n";

    const int every = std::max(1, o.log_every);
    Stage current = Stage::Gauss2;
    auto observer = [&](const StageProgress& p) {
        if (p.stage != current || p.epoch == 0) {
            current = p.stage;
            err << "training " << to_string(p.stage) << '\n';
        }
        if (p.stage == Stage::Gauss1 || p.stage == Stage::Gauss2) return;
        if (p.epoch % every == 0)
            log << to_string(p.stage) << ',' << p.epoch << ',' << fmt(p.objective) << ','
                << fmt(p.max_second_moment) << '\n';
    };
    Rng rng(config.seed);
    const HierarchicalModel model = train_pipeline(images, config, rng, observer);
    const fs::path model_path = fs::path(o.out_dir) / "model.hvc";
    save(model, model_path);
    log.flush();
    if (!log) throw IoError("write failed: " + log_path.string());
    out << "wrote " << model_path.string() << '\n';
    return kExitOk;
}

std::vector<Index> selected_units(const Options& o, Index available, Index default_count) {
    if (!o.units.empty()) {
        for (Index u : o.units)
            if (u < 0 || u >= available)
                throw IoError("unit " + std::to_string(u) + " out of range [0, " + std::to_string(available) + ")");
        return o.units;
    }
    std::vector<Index> all;
    for (Index u = 0; u < std::min(available, default_count); ++u) all.push_back(u);
    return all;
}

Index stage_units(const HierarchicalModel& m, Layer2Stage s) {
    return s == Layer2Stage::Spca2 ? m.spca2.output_dim() : m.ica2.output_dim();
}

void write_gabor_csv(const std::vector<GaborParams>& fits, const fs::path& path) {
    std::ofstream f = open_out(path);
    f << "unit,x0,y0,theta,freq,phase,sigma_par,sigma_perp,amplitude,r2\n";
    for (std::size_t j = 0; j < fits.size(); ++j) {
        const auto& g = fits[j];
        f << j << ',' << fmt(g.x0) << ',' << fmt(g.y0) << ',' << fmt(g.theta) << ',' << fmt(g.freq) << ','
          << fmt(g.phase) << ',' << fmt(g.sigma_par) << ',' << fmt(g.sigma_perp) << ',' << fmt(g.amplitude) << ','
          << fmt(g.r2) << '\n';
    }
}

int cmd_analyze(const Options& o, std::ostream& out) {
    const HierarchicalModel model = load(o.model_path);
    const Layer2Stage stage = layer2_stage_from_string(o.stage);
    const Index n_units = stage_units(model, stage);
    ensure_dir(o.out_dir);
    const fs::path dir(o.out_dir);

    if (o.what == "gabor") {
        const auto fits = fit_layer1_gabors(model);
        write_gabor_csv(fits, dir / "gabor.csv");
        const auto ok = std::count_if(fits.begin(), fits.end(), [](const auto& g) { return g.r2 >= kGaborSuccessR2; });
        out << "gabor fits: " << fits.size() << ", r2 >= " << kGaborSuccessR2 << ": " << ok << '\n';
        return kExitOk;
    }

    if (o.what == "stc") {
        const auto units = selected_units(o, n_units, 4);
        const Index dim = model.config.layer2_dim();
        const Index n = o.stc_samples > 0 ? o.stc_samples : 4 * dim;
        std::ofstream f = open_out(dir / "stc.csv");
        f << "stage,unit,rank,eigenvalue\n";
        for (Index u : units) {
            Rng rng(o.analysis_seed);
            const BatchResponse respond = [&](const RowMatrix& X) -> Vector {
                if (stage == Layer2Stage::Spca2)
                    return spca::infer_batch(model.spca2, assemble_quadrants_batch(model, X)).col(u);
                return forward_batch(model, X).col(u);
            };
            const StcSpectrum s = stc(respond, dim, n, rng);
            for (Index k = 0; k < s.eigvals.size(); ++k)
                f << o.stage << ',' << u << ',' << k << ',' << fmt(s.eigvals[k]) << '\n';
            out << o.stage << " unit " << u << ": top eigenvalue " << fmt(s.eigvals[0]) << ", bottom "
                << fmt(s.eigvals[s.eigvals.size() - 1]) << '\n';
        }
        return kExitOk;
    }

    if (o.what == "rfmap" || o.what == "classify") {
        const auto units = selected_units(o, n_units, n_units);
        const auto fits = fit_layer1_gabors(model);
        if (o.what == "rfmap") {
            for (Index u : units) {
                const RfMap map = build_rf_map(model, u, stage, fits);
                if (map.bars.empty()) throw DegenerateInput("no successful layer-1 Gabor fits to draw");
                render_rf_map(map, dir / ("rfmap_" + o.stage + "_" + std::to_string(u) + ".svg"));
            }
            out << "wrote " << units.size() << " RF maps\n";
            return kExitOk;
        }
        std::map<CellClass, int> counts;
        std::ofstream f = open_out(dir / "classify.txt");
        f << "# unit class active oriented dispersion_deg resultants(4x4, -1 inactive)\n";
        for (Index u : units) {
            const RfMap map = build_rf_map(model, u, stage, fits);
            if (map.bars.empty()) throw DegenerateInput("no successful layer-1 Gabor fits to classify");
            const CellReport rep = classify_cell(map);
            ++counts[rep.cls];
            f << u << ' ' << to_string(rep.cls) << ' ' << rep.active << ' ' << rep.oriented << ' '
              << fmt(rep.dispersion_deg);
            for (double r : rep.resultants) f << ' ' << fmt(r);
            f << '\n';
        }
        const double total = static_cast<double>(units.size());
        for (CellClass c : {CellClass::UniformOrientation, CellClass::NonUniform, CellClass::LocationOnly}) {
            const std::string line = std::string(to_string(c)) + " " + std::to_string(counts[c]) + " " +
                                     fmt(counts[c] / total);
            f << "# fraction " << line << '\n';
            out << line << '\n';
        }
        return kExitOk;
    }
    throw IoError("unknown analysis '" + o.what + "'");
}

int cmd_render(const Options& o, std::ostream& out) {
    const HierarchicalModel model = load(o.model_path);
    ensure_dir(o.out_dir);
    const fs::path dir(o.out_dir);
    const int P = model.config.layer1_patch;
    if (o.what.empty() || o.what == "spca1") {
        render_filters(model.spca1.decoder, P, dir / "spca1.pgm");
        out << "wrote " << (dir / "spca1.pgm").string() << '\n';
    }
    if (o.what.empty() || o.what == "ica1") {
        render_filters(pixel_features(model), P, dir / "ica1.pgm");
        out << "wrote " << (dir / "ica1.pgm").string() << '\n';
    }
    return kExitOk;
}

int cmd_info(const Options& o, std::ostream& out) {
    const HierarchicalModel model = load(o.model_path);
    out << format_config(model.config);
    out << "chain = " << model.spca1.input_dim() << " -> " << model.spca1.output_dim() << " -> "
        << model.ica1.output_dim() << " -> (x4) " << model.spca2.input_dim() << " -> " << model.spca2.output_dim()
        << " -> " << model.ica2.output_dim() << '\n';
    out << "gauss_tables = " << model.gauss1.samples() << ", " << model.gauss2.samples() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    configure_threads_from_env();
    Options o;
    CLI::App app{"Two-layer efficient-coding model: training and receptive-field analysis", "hvc"};
    app.require_subcommand(1);

    auto* pre = app.add_subcommand("preprocess", "Grayscale, downscale and normalize a directory of PGM/PPM images");
    pre->add_option("--in", o.in_dir, "Directory of .pgm/.ppm images")->required();
    pre->add_option("--out", o.out_dir, "Output directory for .hvcr rasters")->required();

    auto* train = app.add_subcommand("train", "Train the full model layer by layer");
    train->add_option("--config", o.config_path, "key = value config file (overrides the preset)");
    train->add_option("--seed", o.seed, "RNG seed")->required();
    train->add_option("--preset", o.preset, "Base hyperparameters")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->capture_default_str();
    train->add_option("--data", o.data_dir, "Directory of .hvcr rasters from preprocess");
    train->add_option("--out", o.out_dir, "Output directory for model.hvc and train_log.csv");
    train->add_flag("--dry-run", o.dry_run, "Print the effective hyperparameters and exit");
    train->add_option("--log-every", o.log_every, "Log one CSV row every N epochs")->capture_default_str();

    auto* analyze = app.add_subcommand("analyze", "Gabor fits, STC spectra, RF maps, cell taxonomy");
    analyze->add_option("--model", o.model_path, "Model file")->required();
    analyze->add_option("--what", o.what, "Analysis to run")
        ->required()
        ->check(CLI::IsMember({"gabor", "stc", "rfmap", "classify"}));
    analyze->add_option("--unit", o.units, "Layer-2 unit index (repeatable; default: all, or 4 for stc)");
    analyze->add_option("--stage", o.stage, "Layer-2 stage")
        ->check(CLI::IsMember({"spca2", "ica2"}))
        ->capture_default_str();
    analyze->add_option("--stc-samples", o.stc_samples, "White-noise stimuli per STC unit (default 4 x dim)");
    analyze->add_option("--seed", o.analysis_seed, "RNG seed for STC stimuli")->capture_default_str();
    analyze->add_option("--out", o.out_dir, "Output directory")->required();

    auto* render = app.add_subcommand("render", "Render layer-1 filters as PGM grids");
    render->add_option("--model", o.model_path, "Model file")->required();
    render->add_option("--what", o.what, "spca1 or ica1 (default: both)")->check(CLI::IsMember({"spca1", "ica1"}));
    render->add_option("--out", o.out_dir, "Output directory")->required();

    auto* info = app.add_subcommand("info", "Print a model's configuration and dimensions");
    info->add_option("--model", o.model_path, "Model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (pre->parsed()) return cmd_preprocess(o, out);
        if (train->parsed()) return cmd_train(o, out, err);
        if (analyze->parsed()) return cmd_analyze(o, out);
        if (render->parsed()) return cmd_render(o, out);
        if (info->parsed()) return cmd_info(o, out);
    } catch (const DegenerateInput& e) {
        err << "error: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitIo;
}

}  // namespace hvc
