// Acceptance suite: one PASS/FAIL line per criterion.
//
//   posegen_acceptance [--criterion N] [--workdir DIR]
//
// N = 0 runs all eight. Exit status is 0 only if every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "model_helpers.hpp"
#include "oracles.hpp"
#include "posegen/metrics.hpp"
#include "posegen/microdataset.hpp"
#include "posegen/posemap.hpp"
#include "posegen/trainer.hpp"

using namespace posegen;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

fs::path g_workdir;

fs::path fresh_dir(const std::string& name) {
    const auto d = g_workdir / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::vector<double> values(const torch::Tensor& t) {
    const auto c = t.detach().to(torch::kFloat64).contiguous().view(-1);
    return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

KeypointSet swap_labels(const KeypointSet& k) {
    KeypointSet s = k;
    for (int j = 0; j < kNumKeypoints; ++j)
        s.points[static_cast<std::size_t>(mirrored_joint(j))] = k.points[static_cast<std::size_t>(j)];
    return s;
}

// Tiny trainable setup shared by the training criteria.
RunConfig micro_config(int size, const fs::path& data, const fs::path& out) {
    RunConfig c = helpers::tiny_config(size, size, 16, 2);
    c.generator.lstm_hidden_channels = 32;
    c.disc.base_channels = 16;
    c.perceptual.base_channels = 16;
    c.data.root = data.string();
    c.train.lr0 = 2e-4;
    c.train.epochs = 100000;
    c.train.decay_every = 100000;
    c.train.checkpoint_every = 100000;
    c.train.output_dir = out.string();
    return c;
}

std::vector<SkuGroup> micro_groups(const fs::path& root, int skus, int items, int size, std::uint64_t seed) {
    make_microdataset(root, {skus, items, size, size, seed, 0});
    return scan_dataset(root, "train");
}

// ---------------------------------------------------------------------------

Outcome rasterizer_goldens() {
    const auto dir = oracle::fixtures_dir();
    const auto standing = load_keypoints(dir / "canonical_standing.keypoints.json");
    const bool g1 = rasterize_pose(standing, 256, 256, 4, kDefaultVisThreshold).pixels ==
                    read_image(dir / "canonical_standing_256.png");
    const auto raised = load_keypoints(dir / "raised_arm.keypoints.json");
    const bool g2 = rasterize_pose(raised, 128, 96).pixels == read_image(dir / "raised_arm_128x96.png");

    KeypointSet hidden;
    hidden.frame = {64, 64};
    for (auto& p : hidden.points) p = {20, 30, 0.0f};
    const auto black = rasterize_pose(hidden, 64, 64).pixels;
    const bool all_black = std::all_of(black.data.begin(), black.data.end(), [](float v) { return v == 0.0f; });

    std::mt19937_64 rng(21);
    int mirrored = 0;
    constexpr int kTrials = 40;
    for (int t = 0; t < kTrials; ++t) {
        const int h = 32 + 4 * (t % 5), w = 24 + 3 * (t % 7);
        std::uniform_int_distribution<int> xs(0, 8 * w - 1), ys(0, 8 * h - 1);
        KeypointSet k;
        k.frame = {h, w};
        for (auto& p : k.points) p = {xs(rng) / 8.0f, ys(rng) / 8.0f, 1.0f};
        const int lw = 1 + t % 4;
        mirrored += rasterize_pose(transform_keypoints(k, HFlip{}), h, w, lw, 0.1f).pixels ==
                    hflip(rasterize_pose(swap_labels(k), h, w, lw, 0.1f).pixels);
    }
    return {g1 && g2 && all_black && mirrored == kTrials,
            fmt("goldens %d/2, all-invisible black %s, hflip %d/%d", g1 + g2, all_black ? "yes" : "no", mirrored,
                kTrials)};
}

Outcome gradient_check() {
    RunConfig cfg = helpers::tiny_config(32, 32, 8, 1);
    Trainer trainer(cfg, torch::kFloat64);
    const auto batch = helpers::random_batch(32, 32, 2, 5, torch::kFloat64);
    std::vector<torch::Tensor> params;
    for (auto* m : {static_cast<torch::nn::Module*>(trainer.generator().get()),
                    static_cast<torch::nn::Module*>(trainer.image_discriminator().get()),
                    static_cast<torch::nn::Module*>(trainer.pair_discriminator().get())})
        for (const auto& p : m->parameters()) params.push_back(p);
    auto f = [&] { return trainer.generator_objective(batch).total; };
    constexpr int kCoords = 300;
    const auto r = helpers::gradcheck(f, params, kCoords, 1e-3, 17);
    const double worst = *std::max_element(r.rel_errors.begin(), r.rel_errors.end());
    return {r.pass_fraction() >= 0.99,
            fmt("%d/%d coordinates within rel 1e-3 (%.2f%%, need 99%%), worst %.3g", r.passed, kCoords,
                100 * r.pass_fraction(), worst)};
}

Outcome shapes_and_ranges() {
    torch::NoGradGuard no_grad;
    torch::manual_seed(3);
    std::string failures;
    for (auto [h, w] : {std::pair{64, 64}, {128, 64}, {256, 256}}) {
        for (Mode mode : {Mode::Single, Mode::Multi}) {
            GeneratorConfig gc;
            gc.image_height = h;
            gc.image_width = w;
            gc.mode = mode;
            Generator g(gc);
            const auto b = helpers::random_batch(h, w, mode == Mode::Single ? 1 : 3, 9);
            const auto y = g->forward(b.sources, b.target_pose);
            const bool ok = y.sizes() == torch::IntArrayRef({1, 3, h, w}) && y.min().item<float>() >= -1.0f &&
                            y.max().item<float>() <= 1.0f && torch::isfinite(y).all().item<bool>();
            if (!ok) failures += fmt(" G %dx%d", h, w);
        }
    }
    for (auto [h, w] : {std::pair{70, 70}, {128, 64}, {256, 256}}) {
        DiscConfig dc;
        PatchDiscriminator di(dc);
        dc.in_channels = 6;
        PatchDiscriminator dp(dc);
        const auto img = torch::rand({1, 3, h, w}) * 2 - 1;
        const std::vector<int64_t> grid{1, 1, oracle::patch_grid(h, 3), oracle::patch_grid(w, 3)};
        if (d_image(di, img).map.sizes() != torch::IntArrayRef(grid)) failures += fmt(" D_I %dx%d", h, w);
        if (d_pair(dp, img, torch::rand({1, 3, h, w})).map.sizes() != torch::IntArrayRef(grid))
            failures += fmt(" D_P %dx%d", h, w);
    }
    if (oracle::receptive_field(3) < 70 || patch_receptive_field(3) != oracle::receptive_field(3))
        failures += " receptive field";
    return {failures.empty(), failures.empty() ? "G at 64x64, 128x64, 256x256 (single, multi); grids at 70, 128x64, 256"
                                               : "mismatch:" + failures};
}

Outcome loss_oracles() {
    std::vector<std::string> bad;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(what);
    };
    torch::manual_seed(4);
    double worst_bce = 0;
    for (int t = 0; t < 10; ++t) {
        const auto real = torch::randn({1, 1, 30, 30}, torch::kFloat64) * 3;
        const auto fake = torch::randn({1, 1, 30, 30}, torch::kFloat64) * 3;
        double r = 0, f = 0;
        for (double v : values(real)) r += oracle::bce_real(v);
        for (double v : values(fake)) f += oracle::bce_fake(v);
        worst_bce = std::max(worst_bce, std::abs(d_i_loss({real}, {fake}).item<double>() - (r + f) / 900));
    }
    check(worst_bce <= 1e-6, "bce");
    const auto zeros = torch::zeros({1, 1, 30, 30}, torch::kFloat64);
    check(std::abs(d_i_loss({zeros}, {zeros}).item<double>() - 2 * std::log(2.0)) <= 1e-6, "bce 2ln2");

    const auto a = torch::rand({1, 3, 32, 32}, torch::kFloat64) * 2 - 1;
    const auto b = torch::rand({1, 3, 32, 32}, torch::kFloat64) * 2 - 1;
    PerceptualConfig pc;
    pc.base_channels = 8;
    auto phi = make_perceptual_extractor(pc);
    phi->to(torch::kFloat64);
    const auto rl = recon_loss(a, b, stages_of(phi));
    check(std::abs(rl.l1.item<double>() - oracle::mean_abs_diff(values(a), values(b))) <= 1e-6, "l1");
    const auto fa = phi->forward(a), fb = phi->forward(b);
    double perc = 0;
    for (std::size_t k = 0; k < fa.size(); ++k) perc += pc.lambdas[k] * oracle::mean_abs_diff(values(fa[k]), values(fb[k]));
    check(std::abs(rl.perceptual.item<double>() - perc) <= 1e-6, "perceptual");

    std::mt19937_64 rng(6);
    std::gamma_distribution<double> gam(0.7, 1.0);
    std::vector<std::vector<double>> probs(53, std::vector<double>(7));
    for (auto& row : probs) {
        double s = 0;
        for (auto& v : row) s += (v = gam(rng));
        for (auto& v : row) v /= s;
    }
    const auto is = inception_score(probs, 5);
    const auto is_ref = oracle::inception_score(probs, 5);
    check(std::abs(is.mean - is_ref.first) <= 1e-9 && std::abs(is.std - is_ref.second) <= 1e-9, "inception score");
    const std::vector<std::vector<double>> uniform(20, std::vector<double>(7, 1.0 / 7));
    check(std::abs(inception_score(uniform, 2).mean - 1.0) <= 1e-9, "IS uniform");
    std::vector<std::vector<double>> onehot;
    for (int i = 0; i < 7; ++i) {
        onehot.emplace_back(7, 0.0);
        onehot.back()[static_cast<std::size_t>(i)] = 1.0;
    }
    check(std::abs(inception_score(onehot, 1).mean - 7.0) <= 1e-9, "IS one-hot");

    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::normal_distribution<float> noise(0.0f, 0.1f);
    Image x(3, 28, 33), y(3, 28, 33);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        x.data[i] = u(rng);
        y.data[i] = std::clamp(x.data[i] + noise(rng), 0.0f, 1.0f);
    }
    check(std::abs(ssim(x, y) - oracle::ssim(x, y)) <= 1e-6, "ssim");
    const double constant = (2 * 0.5 * 0.25 + 1e-4) / (0.25 + 0.0625 + 1e-4);
    check(std::abs(ssim(Image(1, 16, 16, 0.5f), Image(1, 16, 16, 0.25f)) - constant) <= 1e-6, "ssim constant");

    std::string detail = bad.empty() ? "BCE, L1, perceptual, IS, SSIM and closed forms" : "failed:";
    for (const auto& s : bad) detail += " " + s;
    return {bad.empty(), detail + fmt(" (constant SSIM %.6f)", constant)};
}

struct RunSummary {
    std::vector<LogRecord> log;
    bool finite = true;
};

RunSummary train_micro(RunConfig cfg, const std::vector<SkuGroup>& groups, long steps) {
    cfg.train.max_steps = steps;
    Trainer trainer(cfg);
    RunSummary s;
    s.log = fit(trainer, groups).log;
    for (const auto& r : s.log)
        for (double v : {r.losses.l1, r.losses.perceptual, r.losses.g_adv_i, r.losses.g_adv_p, r.losses.d_i_loss,
                         r.losses.d_p_loss, r.losses.total_g})
            s.finite = s.finite && std::isfinite(v);
    return s;
}

Outcome overfit() {
    const auto root = fresh_dir("overfit");
    const auto groups = micro_groups(root / "data", 2, 3, 64, 0);
    RunConfig cfg = micro_config(64, root / "data", root / "recon");
    cfg.train.lr0 = 1e-3;
    cfg.train.alpha = 0;
    cfg.train.beta = 0;
    const auto recon = train_micro(cfg, groups, 2000);
    const double first = recon.log.front().losses.l1;
    // mean over the final epoch (one step per SKU)
    const double last = (recon.log[recon.log.size() - 1].losses.l1 + recon.log[recon.log.size() - 2].losses.l1) / 2;

    cfg.train.alpha = 1;
    cfg.train.beta = 1;
    cfg.train.output_dir = (root / "adv").string();
    const auto adv = train_micro(cfg, groups, 2000);
    const bool pass = recon.log.size() == 2000 && last <= 0.05 && last <= 0.1 * first && adv.log.size() == 2000 &&
                      adv.finite && recon.finite;
    return {pass, fmt("alpha=beta=0: l1 %.4f -> %.4f (ratio %.3f); alpha=beta=1: %zu steps, finite %s", first, last,
                      last / first, adv.log.size(), adv.finite ? "yes" : "no")};
}

Image stripe(bool vertical, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::uniform_int_distribution<int> pos(4, 48), width(6, 12);
    Image img(3, 64, 64, u(rng) * 0.4f - 0.9f);
    const float c[3] = {u(rng) * 2 - 1, u(rng) * 2 - 1, u(rng) * 2 - 1};
    const int p = pos(rng), wd = width(rng);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (vertical ? (x >= p && x < p + wd) : (y >= p && y < p + wd)) img.at(ch, y, x) = c[ch];
    return img;
}

double stripe_accuracy() {
    torch::manual_seed(0);
    std::mt19937_64 rng(0);
    std::vector<torch::Tensor> real, fake;
    for (int i = 0; i < 100; ++i) {
        real.push_back(image_to_tensor(stripe(true, rng)));
        fake.push_back(image_to_tensor(stripe(false, rng)));
    }
    PatchDiscriminator d(DiscConfig{});
    torch::optim::Adam opt(d->parameters(), adam_options(TrainConfig{}).lr(2e-4));
    std::uniform_int_distribution<std::size_t> pick(0, 99);
    for (int step = 0; step < 200; ++step) {
        std::vector<torch::Tensor> rb, fb;
        for (int i = 0; i < 8; ++i) {
            rb.push_back(real[pick(rng)]);
            fb.push_back(fake[pick(rng)]);
        }
        opt.zero_grad();
        d_i_loss(d_image(d, torch::cat(rb)), d_image(d, torch::cat(fb))).backward();
        opt.step();
    }
    torch::NoGradGuard no_grad;
    int correct = 0;
    for (const auto& t : real) correct += torch::sigmoid(d_image(d, t).mean()).item<double>() > 0.5;
    for (const auto& t : fake) correct += torch::sigmoid(d_image(d, t).mean()).item<double>() < 0.5;
    return correct / 200.0;
}

Outcome discriminator_sanity() {
    const double acc = stripe_accuracy();

    const auto root = fresh_dir("dp_asymmetry");
    const auto groups = micro_groups(root / "data", 4, 3, 32, 1);
    std::vector<std::pair<torch::Tensor, torch::Tensor>> items;  // image, pose
    for (const auto& g : groups)
        for (const auto& it : g.items)
            items.emplace_back(image_to_tensor(it.image), image_to_tensor(rasterize_pose(it.keypoints, 32, 32).pixels));
    int passes = 0;
    constexpr int kSeeds = 20;
    for (int seed = 0; seed < kSeeds; ++seed) {
        RunConfig cfg = micro_config(32, root / "data", root / fmt("run%02d", seed));
        cfg.generator.base_channels = 8;
        cfg.generator.n_res_blocks = 1;
        cfg.generator.lstm_hidden_channels = 16;
        cfg.train.seed = static_cast<std::uint64_t>(seed);
        cfg.train.max_steps = 120;
        Trainer trainer(cfg);
        fit(trainer, groups);
        torch::NoGradGuard no_grad;
        const auto n = items.size();
        double consistent = 0, shuffled = 0;
        for (std::size_t i = 0; i < n; ++i) {
            // pose of an item from another SKU
            const auto& other = items[(i + 3 + 3 * static_cast<std::size_t>(seed % 3)) % n];
            consistent += d_pair(trainer.pair_discriminator(), items[i].first, items[i].second).mean().item<double>();
            shuffled += d_pair(trainer.pair_discriminator(), items[i].first, other.second).mean().item<double>();
        }
        passes += consistent > shuffled;
    }
    return {acc > 0.9 && passes >= 16,
            fmt("stripe accuracy %.3f (need > 0.9); D_P consistent > shuffled on %d/%d seeds (need 16)", acc, passes,
                kSeeds)};
}

Outcome determinism_and_resume() {
    const auto root = fresh_dir("determinism");
    const auto groups = micro_groups(root / "data", 3, 3, 32, 2);
    auto cfg_for = [&](const std::string& name) {
        RunConfig c = micro_config(32, root / "data", root / name);
        c.generator.base_channels = 8;
        c.generator.n_res_blocks = 1;
        c.generator.lstm_hidden_channels = 16;
        c.data.augment = true;
        c.train.epochs = 6;
        c.train.checkpoint_every = 2;
        c.train.seed = 5;
        return c;
    };
    auto lines = [](const fs::path& dir) {
        std::ifstream in(dir / "train_log.jsonl");
        std::vector<std::string> out;
        for (std::string l; std::getline(in, l);) out.push_back(l);
        return out;
    };
    {
        Trainer a(cfg_for("a"));
        fit(a, groups);
        Trainer b(cfg_for("b"));
        fit(b, groups);
    }
    const auto la = lines(root / "a"), lb = lines(root / "b");
    const bool same = la == lb && la.size() == 18;

    RunConfig part = cfg_for("c");
    part.train.epochs = 2;
    {
        Trainer c(part);
        fit(c, groups);
    }
    Trainer resumed(cfg_for("c"));
    resumed.load_checkpoint(root / "c" / "epoch_0002.ckpt");
    fit(resumed, groups);
    const auto lc = lines(root / "c");
    bool weights = true;
    const auto final_a = load_archive(root / "a" / "epoch_0006.ckpt"), final_c = load_archive(root / "c" / "epoch_0006.ckpt");
    for (const auto& [name, t] : final_a.tensors)
        weights = weights && final_c.tensors.count(name) && torch::equal(t, final_c.tensors.at(name));
    return {same && lc == la && weights,
            fmt("repeat runs identical: %s (%zu log lines); resumed log identical: %s; final tensors identical: %s",
                same ? "yes" : "no", la.size(), lc == la ? "yes" : "no", weights ? "yes" : "no")};
}

Outcome ablation_plumbing() {
    const auto root = fresh_dir("ablation");
    make_microdataset(root / "data", {3, 3, 32, 32, 3, 2});
    const auto groups = scan_dataset(root / "data", "train");
    const auto test_groups = scan_dataset(root / "data", "test");
    struct Variant {
        std::string label;
        bool d_i, d_p;
        Mode mode;
    };
    const std::vector<Variant> variants{
        {"G+D_I-S", true, false, Mode::Single},  {"G+D_P-S", false, true, Mode::Single},
        {"G+D_I+D_P-S", true, true, Mode::Single}, {"G+D_I-M", true, false, Mode::Multi},
        {"G+D_P-M", false, true, Mode::Multi},   {"G+D_I+D_P-M", true, true, Mode::Multi},
    };
    std::set<std::string> labels, reports;
    int completed = 0;
    for (const auto& v : variants) {
        const auto dir = root / v.label;
        RunConfig cfg = micro_config(32, root / "data", dir);
        cfg.generator.base_channels = 8;
        cfg.generator.n_res_blocks = 1;
        cfg.generator.lstm_hidden_channels = 16;
        cfg.generator.mode = v.mode;
        cfg.train.use_d_i = v.d_i;
        cfg.train.use_d_p = v.d_p;
        cfg.train.alpha = v.d_i ? 1 : 0;
        cfg.train.beta = v.d_p ? 1 : 0;
        cfg.train.epochs = 8;
        cfg.train.checkpoint_every = 8;
        Trainer trainer(cfg);
        const auto result = fit(trainer, groups);
        if (result.final_checkpoint.empty()) continue;

        Generator g = load_generator(result.final_checkpoint);
        fs::create_directories(dir / "gen");
        fs::create_directories(dir / "target");
        for (const auto& sku : test_groups) {
            for (std::size_t t = 0; t < sku.items.size(); ++t) {
                std::vector<Image> sources;
                for (std::size_t s = 0; s < sku.items.size(); ++s)
                    if (s != t) sources.push_back(sku.items[s].image);
                if (v.mode == Mode::Single) sources.resize(1);
                const auto pose = rasterize_pose(sku.items[t].keypoints, 32, 32);
                const auto name = sku.sku_id + fmt("_%zu.png", t);
                write_png_model_range(dir / "gen" / name, synthesize(g, sources, pose));
                write_png_model_range(dir / "target" / name, sku.items[t].image);
            }
        }
        ToyClassifier clf(10, 0);
        MetricsReport report = evaluate_folder(dir / "gen", dir / "target", clf, 2);
        report.label = v.label;
        const auto json = report_to_json(report);
        std::ofstream(dir / "report.json") << json << "\n";
        labels.insert(report.label);
        reports.insert(json);
        ++completed;
        std::cout << "  " << v.label << ": ssim " << fmt("%.4f", report.ssim_mean) << ", IS "
                  << fmt("%.4f", report.is_mean) << " over " << report.n_images << " images\n";
    }
    const bool pass = completed == 6 && labels.size() == 6 && reports.size() == 6;
    return {pass, fmt("%d/6 variants trained and evaluated, %zu distinct labels, %zu distinct reports", completed,
                      labels.size(), reports.size())};
}

struct Criterion {
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posegen acceptance suite"};
    int which = 0;
    std::string workdir = (fs::temp_directory_path() / "posegen_acceptance").string();
    app.add_option("--criterion", which, "criterion number 1-8; 0 runs all")->check(CLI::Range(0, 8));
    app.add_option("--workdir", workdir, "scratch directory");
    CLI11_PARSE(app, argc, argv);
    g_workdir = workdir;
    at::set_num_threads(1);

    const std::vector<Criterion> criteria{
        {"rasterizer golden suite", 5, rasterizer_goldens},
        {"gradient check of total_g", 300, gradient_check},
        {"shape and range suite", 60, shapes_and_ranges},
        {"loss and metric oracles", 60, loss_oracles},
        {"overfit on the micro-dataset", 1200, overfit},
        {"discriminator sanity", 600, discriminator_sanity},
        {"determinism and resumption", 600, determinism_and_resume},
        {"ablation plumbing", 1200, ablation_plumbing},
    };
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (which != 0 && static_cast<std::size_t>(which) != i + 1) continue;
        const auto& c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        all = all && pass;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " " << c.name << ": " << o.detail
                  << fmt(" [%.1fs of %.0fs]", secs, c.budget_seconds) << std::endl;
    }
    return all ? 0 : 1;
}
