// posegen command-line tool: rasterize, train, synthesize, evaluate, make-microdataset.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "posegen/config.hpp"
#include "posegen/data.hpp"
#include "posegen/log.hpp"
#include "posegen/metrics.hpp"
#include "posegen/microdataset.hpp"
#include "posegen/posemap.hpp"
#include "posegen/scripted_classifier.hpp"
#include "posegen/trainer.hpp"

namespace {

using namespace posegen;

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<int, int> parse_size(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw UsageError("size must look like HxW, got '" + s + "'");
    try {
        const int h = std::stoi(s.substr(0, x)), w = std::stoi(s.substr(x + 1));
        if (h <= 0 || w <= 0) throw UsageError("size must be positive");
        return {h, w};
    } catch (const std::logic_error&) {
        throw UsageError("size must look like HxW, got '" + s + "'");
    }
}

int num_workers() {
    const char* env = std::getenv("POSEGEN_NUM_WORKERS");
    if (!env) return 0;
    try {
        return std::max(0, std::stoi(env));
    } catch (const std::logic_error&) {
        throw UsageError("POSEGEN_NUM_WORKERS must be an integer");
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct RasterizeArgs {
    std::string keypoints, out, size = "256x256";
    int line_width = 0;
    double vis_threshold = kDefaultVisThreshold;
};

int run_rasterize(const RasterizeArgs& a) {
    const auto [h, w] = parse_size(a.size);
    if (a.line_width < 0) throw UsageError("--line-width must be >= 0");
    const KeypointSet kps = load_keypoints(a.keypoints);
    const int lw = a.line_width > 0 ? a.line_width : default_line_width(h);
    write_png(a.out, rasterize_pose(kps, h, w, lw, static_cast<float>(a.vis_threshold)).pixels);
    return kOk;
}

struct TrainArgs {
    std::string config, resume, mode;
    std::vector<std::string> overrides;
    bool include_target = false;
};

int run_train(const TrainArgs& a) {
    RunConfig cfg = load_run_config(a.config);
    for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!a.mode.empty()) cfg.generator.mode = parse_mode(a.mode);
    if (a.include_target) cfg.data.include_target_in_sources = true;
    cfg.validate();
    if (cfg.data.root.empty()) throw ConfigError("data.root is not set");

    const int workers = num_workers();
    at::set_num_threads(std::max(1, workers));
    const auto groups = scan_dataset(cfg.data.root, cfg.data.split,
                                     {cfg.generator.image_height, cfg.generator.image_width, workers});
    log_info(std::to_string(groups.size()) + " SKUs loaded from " + cfg.data.root);

    Trainer trainer(cfg);
    if (!a.resume.empty()) {
        trainer.load_checkpoint(a.resume);
        log_info("resumed from " + a.resume + " at epoch " + std::to_string(trainer.epoch()) + ", step " +
                 std::to_string(trainer.global_step()));
    }
    const FitResult result = fit(trainer, groups, [](const LogRecord& r) {
        char line[256];
        std::snprintf(line, sizeof(line), "step %ld epoch %d l1 %.5f perc %.5f g_i %.4f g_p %.4f d_i %.4f d_p %.4f",
                      r.step, r.epoch, r.losses.l1, r.losses.perceptual, r.losses.g_adv_i, r.losses.g_adv_p,
                      r.losses.d_i_loss, r.losses.d_p_loss);
        log_info(line);
    });
    std::cout << (result.final_checkpoint.empty() ? std::string("(no checkpoint written)")
                                                  : result.final_checkpoint.string())
              << "\n";
    return kOk;
}

struct SynthArgs {
    std::string ckpt, sources, keypoints, out;
};

int run_synthesize(const SynthArgs& a) {
    RunConfig cfg;
    Generator g = load_generator(a.ckpt, &cfg);
    const auto paths = split_list(a.sources);
    if (paths.empty()) throw UsageError("--sources is empty");
    if (cfg.generator.mode == Mode::Single && paths.size() != 1)
        throw UsageError("checkpoint is single-image; got " + std::to_string(paths.size()) + " sources");
    if (paths.size() > 5) throw UsageError("at most 5 source images");

    const int h = cfg.generator.image_height, w = cfg.generator.image_width;
    std::vector<Image> sources;
    for (const auto& p : paths) sources.push_back(to_model_range(resize(read_image(p), h, w)));
    const KeypointSet kps = load_keypoints(a.keypoints);
    const int lw = cfg.data.line_width > 0 ? cfg.data.line_width : default_line_width(h);
    const PoseMap pose = rasterize_pose(kps, h, w, lw, static_cast<float>(cfg.data.vis_threshold));
    write_png_model_range(a.out, synthesize(g, sources, pose));
    return kOk;
}

struct EvalArgs {
    std::string gen, target, classifier, label;
    int splits = 10;
    bool csv = false;
};

int run_evaluate(const EvalArgs& a) {
    std::unique_ptr<Classifier> clf;
    if (a.classifier.empty()) clf = std::make_unique<ToyClassifier>(10, 0);
    else clf = std::make_unique<ScriptedClassifier>(a.classifier);
    MetricsReport report;
    try {
        report = evaluate_folder(a.gen, a.target, *clf, a.splits);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    report.label = a.label;
    std::cout << (a.csv ? report_to_csv(report) : report_to_json(report) + "\n");
    return kOk;
}

struct MicroArgs {
    std::string out, size = "64x64";
    int skus = 2, items = 3, test_skus = 0;
    std::uint64_t seed = 0;
};

int run_microdataset(const MicroArgs& a) {
    const auto [h, w] = parse_size(a.size);
    if (a.skus < 2) throw UsageError("--skus must be >= 2");
    if (a.items < 2 || a.items > 5) throw UsageError("--items-per-sku must lie in [2,5]");
    if (h < 16 || w < 16 || h % 4 || w % 4) throw UsageError("--size must be >= 16x16 and divisible by 4");
    if (a.test_skus < 0) throw UsageError("--test-skus must be >= 0");
    make_microdataset(a.out, {a.skus, a.items, h, w, a.seed, a.test_skus});
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posegen: pose-guided person image synthesis"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", POSEGEN_VERSION);

    RasterizeArgs ra;
    auto* rasterize = app.add_subcommand("rasterize", "Render a keypoint file as a colored-limb pose map PNG");
    rasterize->add_option("--keypoints", ra.keypoints, "keypoint JSON file")->required();
    rasterize->add_option("--out", ra.out, "output PNG path")->required();
    rasterize->add_option("--size", ra.size, "output size HxW");
    rasterize->add_option("--line-width", ra.line_width, "limb width in pixels; 0 = round(4*H/256)");
    rasterize->add_option("--vis-threshold", ra.vis_threshold, "minimum confidence for a joint to be drawn");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train the generator and discriminators");
    train->add_option("--config", ta.config, "run config (key = value lines)")->required();
    train->add_option("--resume", ta.resume, "checkpoint to resume from");
    train->add_option("--mode", ta.mode, "override generator.mode (single|multi)");
    train->add_option("--set", ta.overrides, "override a config key, key=value (repeatable)");
    train->add_flag("--include-target-in-sources", ta.include_target, "multi mode: also feed the target image to the encoder");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synthesize", "Generate an image of the source person in a target pose");
    synth->add_option("--ckpt", sa.ckpt, "checkpoint file")->required();
    synth->add_option("--sources", sa.sources, "comma-separated source images")->required();
    synth->add_option("--keypoints", sa.keypoints, "target pose keypoint file")->required();
    synth->add_option("--out", sa.out, "output PNG path")->required();

    EvalArgs ea;
    auto* eval = app.add_subcommand("evaluate", "SSIM and Inception Score of generated images against targets");
    eval->add_option("--gen", ea.gen, "directory of generated images")->required();
    eval->add_option("--target", ea.target, "directory of target images (same file names)")->required();
    eval->add_option("--splits", ea.splits, "Inception Score splits");
    eval->add_option("--classifier", ea.classifier, "TorchScript classifier; empty uses the toy classifier");
    eval->add_option("--label", ea.label, "label stored in the report");
    eval->add_flag("--csv", ea.csv, "emit one CSV row per image instead of JSON");

    MicroArgs ma;
    auto* micro = app.add_subcommand("make-microdataset", "Write a small synthetic SKU dataset");
    micro->add_option("--out", ma.out, "output directory")->required();
    micro->add_option("--skus", ma.skus, "number of training SKUs");
    micro->add_option("--items-per-sku", ma.items, "images per SKU (2-5)");
    micro->add_option("--size", ma.size, "image size HxW");
    micro->add_option("--seed", ma.seed, "random seed");
    micro->add_option("--test-skus", ma.test_skus, "extra SKUs written under test/");

    auto* defaults = app.add_subcommand("defaults", "Print every config key with its default value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*rasterize) return run_rasterize(ra);
        if (*train) return run_train(ta);
        if (*synth) return run_synthesize(sa);
        if (*eval) return run_evaluate(ea);
        if (*micro) return run_microdataset(ma);
        if (*defaults) {
            const RunConfig cfg;
            for (const auto& k : config_keys())
                std::cout << "# " << k.doc << "\n" << k.key << " = " << get_config_value(cfg, k.key) << "\n";
            return kOk;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kUsageError;
    } catch (const NonFiniteLoss& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kUsageError;
}
