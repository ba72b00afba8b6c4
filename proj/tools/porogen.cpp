#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "porogen/anneal.hpp"
#include "porogen/checkpoint.hpp"
#include "porogen/error.hpp"
#include "porogen/grid.hpp"
#include "porogen/morph.hpp"
#include "porogen/report.hpp"
#include "porogen/synth.hpp"
#include "porogen/train.hpp"

namespace fs = std::filesystem;
using namespace porogen;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_out(const fs::path& path) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string numbered(const char* prefix, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%02zu.pgm", prefix, i);
    return buf;
}

// Hard data either from explicit --input/--mask files or from a dataset pair.
struct ConditionSource {
    std::string input, mask, target, data;
    int index = -1;

    void add_to(CLI::App* app, bool with_target) {
        app->add_option("--input", input, "Conditioning PGM (hard-data values)");
        app->add_option("--mask", mask, "Mask PGM (255 = informed)");
        if (with_target) app->add_option("--target", target, "Reference PGM");
        app->add_option("--data", data, "Dataset directory (alternative to --input/--mask)");
        app->add_option("--index", index, "Sample index in --data (default: first test sample)");
    }

    struct Loaded {
        ConditionalInput cond;
        std::optional<BinaryImage> target;
    };

    Loaded load() const {
        if (!data.empty()) {
            const fs::path dir(data);
            std::ifstream in(dir / "manifest.json");
            if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
            const auto manifest = synth::manifest_from_json(nlohmann::json::parse(in));
            int i = index;
            if (i < 0) {
                if (manifest.test.empty()) throw ValueError("dataset has no test samples");
                i = manifest.test.front();
            }
            if (i >= manifest.sample_count) throw ValueError("sample index out of range");
            const std::string stem = synth::pair_stem(i);
            const auto cond = make_conditional_input(load_image(dir / "pairs" / (stem + "_input.pgm")),
                                                     load_mask(dir / "pairs" / (stem + "_mask.pgm")));
            const fs::path t = target.empty() ? dir / "pairs" / (stem + "_target.pgm") : fs::path(target);
            return {cond, load_image(t)};
        }
        if (input.empty() || mask.empty()) throw ValueError("need --data or both --input and --mask");
        Loaded l{make_conditional_input(load_image(input), load_mask(mask)), std::nullopt};
        if (!target.empty()) l.target = load_image(target);
        return l;
    }
};

// --config FILE: JSON object whose entries are appended as flags after the
// command line, so they take precedence over it.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!path) return args;
    std::ifstream in(*path);
    if (!in) throw IoError("cannot open config " + *path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw porogen::ParseError(std::string("invalid config JSON: ") + e.what(), e.byte);
    }
    if (!j.is_object()) throw ValueError("config file must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        std::string flag = "--" + key;
        for (auto& c : flag)
            if (c == '_') c = '-';
        auto scalar = [](const nlohmann::json& v) {
            return v.is_string() ? v.get<std::string>() : v.dump();
        };
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_array()) {
            args.push_back(flag);
            for (const auto& v : value) args.push_back(scalar(v));
        } else {
            args.push_back(flag);
            args.push_back(scalar(value));
        }
    }
    return args;
}

int run(int argc, char** argv) {
    CLI::App app{"Conditional GAN and annealing reconstruction of binary porous media"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.set_help_all_flag("--help-all");
    app.add_option("--config", "JSON file whose entries override the command-line flags");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset of (input, mask, target) pairs");
    synth::DatasetOptions sopt;
    std::string synth_out, medium = "blob", mask_spec = "corner:26";
    synth_cmd->add_option("--out", synth_out, "Dataset directory")->required();
    synth_cmd->add_option("--n", sopt.sample_count, "Number of samples")->capture_default_str();
    synth_cmd->add_option("--size", sopt.image_size, "Image side in pixels")->capture_default_str();
    synth_cmd->add_option("--medium", medium, "blob, disks or aniso")->capture_default_str();
    synth_cmd->add_option("--phi", sopt.medium.porosity, "Target porosity")->capture_default_str();
    synth_cmd->add_option("--corr", sopt.medium.correlation_length, "Correlation length (pixels)")
        ->capture_default_str();
    synth_cmd->add_option("--mask", mask_spec, "corner:S, squares:SxK, hstrip:H or vstrip:W")->capture_default_str();
    synth_cmd->add_flag("--random-mask", sopt.random_mask_placement, "Place the mask at a random offset per sample");
    synth_cmd->add_option("--train-fraction", sopt.train_fraction)->capture_default_str();
    synth_cmd->add_option("--seed", sopt.seed)->capture_default_str();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Descriptor curves of a binary image as CSV");
    std::string stats_image, stats_out, stats_desc = "all", stats_phase = "pore", stats_dir = "xy";
    int stats_rmax = 0, stats_pattern = 0;
    stats_cmd->add_option("image", stats_image, "Binary PGM")->required();
    stats_cmd->add_option("--descriptor", stats_desc, "s2, l, c2 or all")->capture_default_str();
    stats_cmd->add_option("--phase", stats_phase, "pore or solid")->capture_default_str();
    stats_cmd->add_option("--direction", stats_dir, "x, y, xy (averaged) or se (diagonal)")->capture_default_str();
    stats_cmd->add_option("--r-max", stats_rmax, "Largest lag (default: half the image side)");
    stats_cmd->add_option("--pattern", stats_pattern, "Emit the NxN pattern distribution instead (code,probability)");
    stats_cmd->add_option("--out", stats_out, "CSV path (default: stdout)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the conditional GAN on a dataset's training split");
    train::TrainConfig tcfg;
    models::NetConfig ncfg;
    std::string train_data, train_out = "generator.bin", train_log;
    train_cmd->add_option("--data", train_data, "Dataset directory")->required();
    train_cmd->add_option("--out", train_out, "Final checkpoint path")->capture_default_str();
    train_cmd->add_option("--log", train_log, "Loss-log CSV path");
    train_cmd->add_option("--epochs", tcfg.epochs)->capture_default_str();
    train_cmd->add_option("--batch", tcfg.batch_size)->capture_default_str();
    train_cmd->add_option("--nz", ncfg.n_z)->capture_default_str();
    train_cmd->add_option("--base", ncfg.base_channels, "Base channel count")->capture_default_str();
    train_cmd->add_option("--max-channels", ncfg.max_channels)->capture_default_str();
    train_cmd->add_option("--lambda-l1", tcfg.weights.lambda_l1)->capture_default_str();
    train_cmd->add_option("--lambda-pattern", tcfg.weights.lambda_pattern)->capture_default_str();
    train_cmd->add_option("--lambda-porosity", tcfg.weights.lambda_porosity)->capture_default_str();
    train_cmd->add_option("--template", tcfg.pattern_template)->capture_default_str();
    train_cmd->add_option("--lr", tcfg.base_lr)->capture_default_str();
    train_cmd->add_option("--decay-start", tcfg.decay_start, "Fraction of steps before the linear decay")
        ->capture_default_str();
    train_cmd->add_flag("--non-saturating", tcfg.non_saturating, "Use -log D(x,G(x,z)) for the generator");
    train_cmd->add_option("--max-steps", tcfg.max_steps, "Stop after this many steps (0 = all epochs)");
    train_cmd->add_option("--checkpoint-every", tcfg.checkpoint_every, "Epochs between intermediate checkpoints");
    train_cmd->add_option("--seed", tcfg.seed)->capture_default_str();

    // reconstruct
    auto* rec_cmd = app.add_subcommand("reconstruct", "Draw k realizations from a trained generator");
    ConditionSource rec_src;
    std::string rec_ckpt, rec_out;
    int rec_k = 1;
    std::uint64_t rec_seed = 0;
    rec_cmd->add_option("--checkpoint", rec_ckpt)->required();
    rec_src.add_to(rec_cmd, false);
    rec_cmd->add_option("--k", rec_k, "Number of realizations")->capture_default_str();
    rec_cmd->add_option("--seed", rec_seed)->capture_default_str();
    rec_cmd->add_option("--out", rec_out, "Output directory")->required();

    // anneal
    auto* ann_cmd = app.add_subcommand("anneal", "Simulated-annealing reconstruction");
    ConditionSource ann_src;
    anneal::AnnealConfig acfg;
    std::string ann_out, ann_trace, ann_stats;
    int ann_s2_rmax = 0;
    ann_src.add_to(ann_cmd, true);
    ann_cmd->add_option("--stats-from", ann_stats, "Image supplying the target statistics (default: the target)");
    ann_cmd->add_option("--sweeps", acfg.sweeps)->capture_default_str();
    ann_cmd->add_option("--t0", acfg.initial_temperature)->capture_default_str();
    ann_cmd->add_option("--cooling", acfg.cooling)->capture_default_str();
    ann_cmd->add_option("--template", acfg.template_size)->capture_default_str();
    ann_cmd->add_option("--porosity-weight", acfg.porosity_weight)->capture_default_str();
    ann_cmd->add_option("--s2-weight", acfg.s2_weight)->capture_default_str();
    ann_cmd->add_option("--s2-r-max", ann_s2_rmax, "Lags in the S2 term (default: quarter of the side)");
    ann_cmd->add_option("--seed", acfg.seed)->capture_default_str();
    ann_cmd->add_option("--out", ann_out, "Output PGM")->required();
    ann_cmd->add_option("--trace", ann_trace, "Energy trace CSV");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Porosity, descriptor, fidelity and diversity report");
    ConditionSource eval_src;
    std::string eval_ckpt, eval_out;
    std::vector<std::string> eval_images, eval_raw;
    int eval_k = 20, eval_rmax = 0;
    std::uint64_t eval_seed = 0;
    std::string eval_dir = "xy";
    eval_src.add_to(eval_cmd, true);
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Generate realizations with this generator");
    eval_cmd->add_option("--realizations", eval_k)->capture_default_str();
    eval_cmd->add_option("--seed", eval_seed)->capture_default_str();
    eval_cmd->add_option("--images", eval_images, "Evaluate existing realizations instead")->expected(1, -1);
    eval_cmd->add_option("--raw", eval_raw, "Pre-overwrite realizations matching --images")->expected(1, -1);
    eval_cmd->add_option("--direction", eval_dir)->capture_default_str();
    eval_cmd->add_option("--r-max", eval_rmax);
    eval_cmd->add_option("--out", eval_out, "Report directory")->required();

    // plot
    auto* plot_cmd = app.add_subcommand("plot", "SVG of target vs realizations vs their average");
    std::string plot_target, plot_out, plot_dir = "xy", plot_phase = "pore";
    std::vector<std::string> plot_images;
    int plot_rmax = 0;
    plot_cmd->add_option("--target", plot_target)->required();
    plot_cmd->add_option("--images", plot_images)->required()->expected(1, -1);
    plot_cmd->add_option("--direction", plot_dir)->capture_default_str();
    plot_cmd->add_option("--phase", plot_phase)->capture_default_str();
    plot_cmd->add_option("--r-max", plot_rmax);
    plot_cmd->add_option("--out", plot_out)->required();

    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (*synth_cmd) {
        sopt.medium.kind = synth::parse_medium_kind(medium);
        sopt.mask = synth::parse_mask_spec(mask_spec);
        const auto m = synth::build_dataset(sopt, synth_out);
        std::cout << "wrote " << m.sample_count << " pairs (" << m.train.size() << " train / " << m.test.size()
                  << " test) to " << synth_out << '\n';
    } else if (*stats_cmd) {
        const auto img = load_image(stats_image);
        std::ofstream file;
        if (!stats_out.empty()) file = open_out(stats_out);
        std::ostream& out = stats_out.empty() ? std::cout : file;
        if (stats_pattern > 0) {
            const auto dist = morph::pattern_distribution(img, stats_pattern);
            out << "code,probability\n";
            for (const auto& [code, p] : dist.entries()) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", p);
                out << code << ',' << buf << '\n';
            }
        } else {
            const auto phase = morph::parse_phase(stats_phase);
            const auto dir = morph::parse_direction(stats_dir);
            int r_max = stats_rmax > 0 ? stats_rmax : std::min(img.width(), img.height()) / 2;
            r_max = std::min(r_max, morph::max_lag(img, dir));
            std::vector<morph::CurveStatistic> curves;
            if (stats_desc == "all") {
                curves = morph::descriptor_suite(img, phase, dir, r_max);
            } else {
                switch (morph::parse_descriptor(stats_desc)) {
                case morph::Descriptor::S2: curves.push_back(morph::two_point_correlation(img, phase, dir, r_max)); break;
                case morph::Descriptor::L: curves.push_back(morph::lineal_path(img, phase, dir, r_max)); break;
                case morph::Descriptor::C2: curves.push_back(morph::two_point_cluster(img, phase, dir, r_max)); break;
                }
            }
            morph::write_curves_csv(out, curves);
        }
        if (!out) throw IoError("failed writing curves");
    } else if (*train_cmd) {
        auto ds = synth::load_dataset(train_data);
        ncfg.image_size = ds.manifest.image_size;
        ncfg.validate();
        std::vector<train::TrainingPair> pairs;
        for (int i : ds.manifest.train) pairs.push_back(ds.pairs.at(static_cast<std::size_t>(i)));
        const fs::path out_path(train_out);
        if (tcfg.checkpoint_every > 0)
            tcfg.checkpoint_dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
        std::ofstream log;
        if (!train_log.empty()) {
            log = open_out(train_log);
            train::write_loss_log_header(log);
        }
        const auto result = train::train(pairs, ncfg, tcfg, [&](const train::StepLog& row) {
            if (log.is_open()) train::write_loss_log_row(log, row);
        });
        if (log.is_open() && !log) throw IoError("failed writing " + train_log);
        nn::write_checkpoint(train::make_checkpoint(result.generator, &result.discriminator,
                                                    {{"train", train::to_json(tcfg)}}),
                             out_path);
        if (!result.log.empty()) {
            const auto& last = result.log.back().losses;
            std::printf("trained %lld steps; final d_loss %.4f g_adv %.4f l1 %.4f pattern %.3g porosity %.3g\n",
                        static_cast<long long>(result.log.size()), last.d_loss, last.g_adv, last.l1,
                        last.pattern, last.porosity);
        }
    } else if (*rec_cmd) {
        const auto g = train::load_generator(nn::read_checkpoint(rec_ckpt));
        const auto src = rec_src.load();
        const auto reals = train::reconstruct(g, src.cond, rec_k, rec_seed);
        const fs::path dir(rec_out);
        fs::create_directories(dir);
        for (std::size_t i = 0; i < reals.size(); ++i) {
            save_image(reals[i].image, dir / numbered("realization", i));
            save_image(reals[i].raw, dir / numbered("raw", i));
        }
        std::cout << "wrote " << reals.size() << " realizations to " << rec_out << '\n';
    } else if (*ann_cmd) {
        const auto src = ann_src.load();
        const BinaryImage stats_img = !ann_stats.empty() ? load_image(ann_stats)
                                      : src.target       ? *src.target
                                                         : throw ValueError("anneal needs --target or --stats-from");
        const int s2_rmax =
            acfg.s2_weight > 0.0 ? (ann_s2_rmax > 0 ? ann_s2_rmax : std::min(stats_img.width(), stats_img.height()) / 4)
                                 : 0;
        const auto target = anneal::target_stats_from_image(stats_img, acfg.template_size, s2_rmax);
        const auto result = anneal::anneal_reconstruct(src.cond, target, acfg);
        ensure_parent(ann_out);
        save_image(result.image, ann_out);
        if (!ann_trace.empty()) {
            auto out = open_out(ann_trace);
            anneal::write_trace_csv(out, result.trace);
            if (!out) throw IoError("failed writing " + ann_trace);
        }
        std::printf("energy %.6g -> %.6g (accepted %lld of %lld proposals)\n", result.initial_energy,
                    result.final_energy, static_cast<long long>(result.accepted),
                    static_cast<long long>(result.proposed));
    } else if (*eval_cmd) {
        const auto src = eval_src.load();
        const fs::path dir(eval_out);
        fs::create_directories(dir);
        std::vector<BinaryImage> images, raw;
        std::optional<nlohmann::json> timing;
        if (!eval_ckpt.empty()) {
            if (!eval_images.empty()) throw ValueError("use either --checkpoint or --images");
            const auto g = train::load_generator(nn::read_checkpoint(eval_ckpt));
            const auto reals = train::reconstruct(g, src.cond, eval_k, eval_seed);
            std::vector<double> seconds;
            for (std::size_t i = 0; i < reals.size(); ++i) {
                images.push_back(reals[i].image);
                raw.push_back(reals[i].raw);
                seconds.push_back(reals[i].seconds);
                save_image(reals[i].image, dir / numbered("realization", i));
                save_image(reals[i].raw, dir / numbered("raw", i));
            }
            timing = nlohmann::json{{"seconds_per_realization", seconds},
                                    {"mean_seconds", report::mean(seconds)}};
        } else {
            if (eval_images.empty()) throw ValueError("eval needs --checkpoint or --images");
            for (const auto& p : eval_images) images.push_back(load_image(p));
            for (const auto& p : eval_raw) raw.push_back(load_image(p));
        }
        report::EvalOptions opts;
        opts.direction = morph::parse_direction(eval_dir);
        opts.r_max = eval_rmax;
        const auto rep = report::evaluate(images, raw, src.cond, src.target ? &*src.target : nullptr, opts);
        write_json(dir / "report.json", report::to_json(rep));
        {
            auto out = open_out(dir / "curves.csv");
            report::write_curves_csv(out, rep);
        }
        {
            auto out = open_out(dir / "porosity.csv");
            report::write_porosity_csv(out, rep);
        }
        if (timing) write_json(dir / "timing.json", *timing);
        std::cout << report::summary(rep);
        if (timing) std::printf("wall-clock per reconstruction: %.4f s\n", timing->at("mean_seconds").get<double>());
    } else if (*plot_cmd) {
        const auto target = load_image(plot_target);
        const auto phase = morph::parse_phase(plot_phase);
        const auto dir = morph::parse_direction(plot_dir);
        int r_max = plot_rmax > 0 ? plot_rmax : std::min(target.width(), target.height()) / 2;
        r_max = std::min(r_max, morph::max_lag(target, dir));
        report::PlotSeries series;
        series.target = morph::descriptor_suite(target, phase, dir, r_max);
        for (const auto& p : plot_images) {
            const auto img = load_image(p);
            if (!img.same_shape(target)) throw ValueError(p + " differs in size from the target");
            series.realizations.push_back(morph::descriptor_suite(img, phase, dir, r_max));
        }
        for (std::size_t k = 0; k < series.target.size(); ++k) {
            std::vector<morph::CurveStatistic> curves;
            for (const auto& r : series.realizations) curves.push_back(r[k]);
            series.average.push_back(morph::average_curves(curves));
        }
        write_text(plot_out, report::render_svg(series));
        std::printf("max gap %.6g\n", report::max_curve_gap(series.target, series.average));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const porogen::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
