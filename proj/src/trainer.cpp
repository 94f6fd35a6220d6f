#include "posegen/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>
#include "posegen/log.hpp"

namespace posegen {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "posegen-ckpt-1";

void require_finite(const torch::Tensor& t, const char* name, long step) {
    if (!std::isfinite(t.item<double>()))
        throw NonFiniteLoss("non-finite " + std::string(name) + " at step " + std::to_string(step + 1));
}

void set_requires_grad(torch::nn::Module& m, bool on) {
    for (auto& p : m.parameters()) p.set_requires_grad(on);
}

void clip(torch::nn::Module& m, double max_norm) {
    if (max_norm > 0.0) torch::nn::utils::clip_grad_norm_(m.parameters(), max_norm);
}

std::unique_ptr<torch::optim::Adam> make_adam(torch::nn::Module& m, const TrainConfig& t) {
    return std::make_unique<torch::optim::Adam>(m.parameters(), adam_options(t));
}

void export_adam(const torch::optim::Adam& opt, const torch::nn::Module& m, const std::string& prefix,
                 TensorArchive& ar) {
    for (const auto& p : m.named_parameters()) {
        auto it = opt.state().find(p.value().unsafeGetTensorImpl());
        if (it == opt.state().end()) continue;
        const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
        ar.tensors[prefix + p.key() + ".exp_avg"] = s.exp_avg().clone();
        ar.tensors[prefix + p.key() + ".exp_avg_sq"] = s.exp_avg_sq().clone();
        ar.tensors[prefix + p.key() + ".step"] = torch::tensor(s.step(), torch::kInt64);
    }
}

void import_adam(torch::optim::Adam& opt, torch::nn::Module& m, const std::string& prefix, const TensorArchive& ar) {
    opt.state().clear();
    for (auto& p : m.named_parameters()) {
        auto avg = ar.tensors.find(prefix + p.key() + ".exp_avg");
        if (avg == ar.tensors.end()) continue;
        auto state = std::make_unique<torch::optim::AdamParamState>();
        state->exp_avg(avg->second.clone());
        state->exp_avg_sq(ar.tensors.at(prefix + p.key() + ".exp_avg_sq").clone());
        state->step(ar.tensors.at(prefix + p.key() + ".step").item<int64_t>());
        opt.state()[p.value().unsafeGetTensorImpl()] = std::move(state);
    }
}

std::string checkpoint_name(int completed_epochs) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "epoch_%04d.ckpt", completed_epochs);
    return buf;
}

}  // namespace

torch::optim::AdamOptions adam_options(const TrainConfig& t) {
    return torch::optim::AdamOptions(t.lr0).betas({t.adam_beta1, t.adam_beta2});
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("lr_schedule: epoch must be >= 0");
    return cfg.lr0 * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

torch::Tensor image_to_tensor(const Image& img, torch::Dtype dtype) {
    auto t = torch::from_blob(const_cast<float*>(img.data.data()), {1, img.channels, img.height, img.width},
                              torch::kFloat32);
    return t.to(dtype).clone();
}

Image tensor_to_image(const torch::Tensor& t) {
    auto c = t.detach().to(torch::kFloat32).contiguous();
    if (c.dim() == 4) {
        if (c.size(0) != 1) throw std::invalid_argument("tensor_to_image: batch size must be 1");
        c = c.squeeze(0);
    }
    if (c.dim() != 3) throw std::invalid_argument("tensor_to_image: expected (C,H,W)");
    Image out(static_cast<int>(c.size(0)), static_cast<int>(c.size(1)), static_cast<int>(c.size(2)));
    std::memcpy(out.data.data(), c.data_ptr<float>(), out.data.size() * sizeof(float));
    return out;
}

StepBatch to_batch(const TrainingTriple& t, torch::Dtype dtype) {
    StepBatch b;
    for (const auto& s : t.sources) b.sources.push_back(image_to_tensor(s, dtype));
    b.target_pose = image_to_tensor(t.target_pose.pixels, dtype);
    b.target_image = image_to_tensor(t.target_image, dtype);
    b.foreign_pose = image_to_tensor(t.foreign_pose.pixels, dtype);
    b.foreign_image = image_to_tensor(t.foreign_image, dtype);
    return b;
}

SampleOptions sample_options(const RunConfig& cfg) {
    SampleOptions o;
    o.mode = cfg.generator.mode;
    o.raster = {cfg.generator.image_height, cfg.generator.image_width, cfg.data.line_width,
                static_cast<float>(cfg.data.vis_threshold)};
    o.include_target_in_sources = cfg.data.include_target_in_sources;
    if (cfg.data.augment) o.augment = AugmentParams{cfg.data.crop_fraction, cfg.data.hflip_prob, cfg.data.max_rotate, 0};
    return o;
}

Trainer::Trainer(RunConfig cfg, torch::Dtype dtype) : cfg_(std::move(cfg)), dtype_(dtype), rng_(cfg_.train.seed) {
    cfg_.validate();
    phi_ = make_perceptual_extractor(cfg_.perceptual);
    phi_->to(dtype_);

    torch::manual_seed(cfg_.train.seed);
    gen_ = Generator(cfg_.generator);
    DiscConfig di = cfg_.disc;
    di.in_channels = 3;
    d_i_ = PatchDiscriminator(di);
    DiscConfig dp = cfg_.disc;
    dp.in_channels = 6;
    d_p_ = PatchDiscriminator(dp);
    gen_->to(dtype_);
    d_i_->to(dtype_);
    d_p_->to(dtype_);

    opt_g_ = make_adam(*gen_, cfg_.train);
    opt_d_i_ = make_adam(*d_i_, cfg_.train);
    opt_d_p_ = make_adam(*d_p_, cfg_.train);
    lr_ = cfg_.train.lr0;
}

void Trainer::set_learning_rate(double lr) {
    lr_ = lr;
    for (auto* opt : {opt_g_.get(), opt_d_i_.get(), opt_d_p_.get()})
        for (auto& group : opt->param_groups())
            static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
}

torch::Tensor Trainer::generate_pair(const StepBatch& b) {
    const auto ci = gen_->encode_images(b.sources);
    const auto poses = torch::cat({b.target_pose, b.foreign_pose}, 0);
    return gen_->decode(ci, gen_->encode_pose(poses));
}

GeneratorLossTerms Trainer::generator_terms(const StepBatch& b, const torch::Tensor& generated) {
    const auto& t = cfg_.train;
    const auto y_hat = generated.slice(0, 0, 1);
    const auto y_hat_foreign = generated.slice(0, 1, 2);

    GeneratorLossTerms terms;
    terms.recon = recon_loss(b.target_image, y_hat, stages_of(phi_));
    const auto zero = torch::zeros({}, generated.options());
    terms.adv.g_adv_i = t.use_d_i
                            ? g_adv_loss(d_image(d_i_, t.adv_on_true_pose ? generated : y_hat_foreign), t.saturating_g_loss)
                            : zero;
    terms.adv.g_adv_p = t.use_d_p ? g_adv_loss(d_pair(d_p_, y_hat_foreign, b.foreign_pose), t.saturating_g_loss) : zero;
    terms.total = total_objective(terms.recon, terms.adv, t.alpha, t.beta);
    return terms;
}

LossReport Trainer::train_step(const TrainingTriple& triple) { return train_step(to_batch(triple, dtype_)); }

DiscriminatorLosses Trainer::discriminator_step(const StepBatch& b, const torch::Tensor& generated) {
    const auto& t = cfg_.train;
    DiscriminatorLosses out;
    const auto y_hat_foreign = generated.slice(0, 1, 2).detach();

    if (t.use_d_i) {
        const auto fake_in = t.adv_on_true_pose ? generated.detach() : y_hat_foreign;
        auto loss = d_i_loss(d_image(d_i_, b.target_image), d_image(d_i_, fake_in));
        require_finite(loss, "d_i_loss", global_step_);
        opt_d_i_->zero_grad();
        loss.backward();
        clip(*d_i_, t.grad_clip);
        opt_d_i_->step();
        out.d_i = loss.item<double>();
    }
    if (t.use_d_p) {
        auto real = d_pair(d_p_, b.foreign_image, b.foreign_pose);
        auto fake = d_pair(d_p_, y_hat_foreign, b.foreign_pose);
        if (t.dp_mismatched_real) {
            auto mismatched = d_pair(d_p_, b.target_image, b.foreign_pose);
            fake.map = torch::cat({fake.map, mismatched.map}, 0);
        }
        auto loss = d_p_loss(real, fake);
        require_finite(loss, "d_p_loss", global_step_);
        opt_d_p_->zero_grad();
        loss.backward();
        clip(*d_p_, t.grad_clip);
        opt_d_p_->step();
        out.d_p = loss.item<double>();
    }
    return out;
}

GeneratorLossTerms Trainer::generator_step(const StepBatch& b, const torch::Tensor& generated) {
    set_requires_grad(*d_i_, false);
    set_requires_grad(*d_p_, false);
    auto terms = generator_terms(b, generated);
    set_requires_grad(*d_i_, true);
    set_requires_grad(*d_p_, true);
    require_finite(terms.recon.l1, "l1", global_step_);
    require_finite(terms.recon.perceptual, "perceptual", global_step_);
    require_finite(terms.adv.g_adv_i, "g_adv_i", global_step_);
    require_finite(terms.adv.g_adv_p, "g_adv_p", global_step_);

    opt_g_->zero_grad();
    terms.total.backward();
    clip(*gen_, cfg_.train.grad_clip);
    opt_g_->step();
    return terms;
}

LossReport Trainer::train_step(const StepBatch& b) {
    const auto generated = generate_pair(b);
    const DiscriminatorLosses d = discriminator_step(b, generated);
    const GeneratorLossTerms g = generator_step(b, generated);
    ++global_step_;

    LossParts parts;
    parts.d_i_loss = d.d_i;
    parts.d_p_loss = d.d_p;
    parts.l1 = g.recon.l1.item<double>();
    parts.perceptual = g.recon.perceptual.item<double>();
    parts.g_adv_i = g.adv.g_adv_i.item<double>();
    parts.g_adv_p = g.adv.g_adv_p.item<double>();
    return total_objective(parts, cfg_.train.alpha, cfg_.train.beta);
}

TensorArchive Trainer::to_archive() const {
    TensorArchive ar;
    export_module(*gen_, "g.", ar);
    export_module(*d_i_, "d_i.", ar);
    export_module(*d_p_, "d_p.", ar);
    export_adam(*opt_g_, *gen_, "opt.g.", ar);
    export_adam(*opt_d_i_, *d_i_, "opt.d_i.", ar);
    export_adam(*opt_d_p_, *d_p_, "opt.d_p.", ar);
    std::ostringstream rng_state;
    rng_state << rng_;
    ar.meta["format"] = kFormat;
    ar.meta["epoch"] = std::to_string(epoch_);
    ar.meta["global_step"] = std::to_string(global_step_);
    ar.meta["rng_state"] = rng_state.str();
    ar.meta["config"] = to_text(cfg_);
    return ar;
}

void Trainer::save_checkpoint(const fs::path& path) const { save_archive(path, to_archive()); }

void Trainer::load_checkpoint(const fs::path& path) {
    const TensorArchive ar = load_archive(path);
    if (ar.meta.count("format") == 0 || ar.meta.at("format") != kFormat)
        throw std::runtime_error("not a posegen checkpoint: " + path.string());
    import_module(*gen_, "g.", ar);
    import_module(*d_i_, "d_i.", ar);
    import_module(*d_p_, "d_p.", ar);
    import_adam(*opt_g_, *gen_, "opt.g.", ar);
    import_adam(*opt_d_i_, *d_i_, "opt.d_i.", ar);
    import_adam(*opt_d_p_, *d_p_, "opt.d_p.", ar);
    std::istringstream rng_state(ar.meta.at("rng_state"));
    rng_state >> rng_;
    epoch_ = std::stoi(ar.meta.at("epoch"));
    global_step_ = std::stol(ar.meta.at("global_step"));
}

std::string to_json_line(const LogRecord& r) {
    nlohmann::json j;
    j["step"] = r.step;
    j["epoch"] = r.epoch;
    j["l1"] = r.losses.l1;
    j["perceptual"] = r.losses.perceptual;
    j["g_adv_i"] = r.losses.g_adv_i;
    j["g_adv_p"] = r.losses.g_adv_p;
    j["d_i_loss"] = r.losses.d_i_loss;
    j["d_p_loss"] = r.losses.d_p_loss;
    j["total_g"] = r.losses.total_g;
    j["lr"] = r.lr;
    return j.dump();
}

LogRecord parse_log_line(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    LogRecord r;
    r.step = j.at("step").get<long>();
    r.epoch = j.at("epoch").get<int>();
    r.losses.l1 = j.at("l1").get<double>();
    r.losses.perceptual = j.at("perceptual").get<double>();
    r.losses.g_adv_i = j.at("g_adv_i").get<double>();
    r.losses.g_adv_p = j.at("g_adv_p").get<double>();
    r.losses.d_i_loss = j.at("d_i_loss").get<double>();
    r.losses.d_p_loss = j.at("d_p_loss").get<double>();
    r.losses.total_g = j.value("total_g", 0.0);
    r.lr = j.at("lr").get<double>();
    return r;
}

std::vector<LogRecord> read_log(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log " + path.string());
    std::vector<LogRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(parse_log_line(line));
    return out;
}

FitResult fit(Trainer& trainer, const std::vector<SkuGroup>& groups,
              const std::function<void(const LogRecord&)>& on_step) {
    if (groups.size() < 2) throw std::invalid_argument("fit: need at least two SKUs");
    const RunConfig& cfg = trainer.config();
    const auto& t = cfg.train;
    const fs::path out_dir = t.output_dir;
    fs::create_directories(out_dir);
    const fs::path log_path = out_dir / "train_log.jsonl";

    // keep only records up to the resumed step
    std::vector<std::string> kept;
    if (trainer.global_step() > 0 && fs::exists(log_path)) {
        std::ifstream in(log_path);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty() && parse_log_line(line).step <= trainer.global_step()) kept.push_back(line);
    }
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write " + log_path.string());
    for (const auto& line : kept) log << line << '\n';

    const SampleOptions opts = sample_options(cfg);
    FitResult result;
    fs::path last_good;

    auto save = [&](const fs::path& path) {
        try {
            trainer.save_checkpoint(path);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("checkpoint write failed (") + e.what() +
                                     "); last good checkpoint: " + (last_good.empty() ? "none" : last_good.string()));
        }
        last_good = path;
        result.checkpoints.push_back(path);
        result.final_checkpoint = path;
    };

    bool stopped = false;
    for (int epoch = trainer.epoch(); epoch < t.epochs && !stopped; ++epoch) {
        trainer.set_learning_rate(lr_schedule(epoch, t));
        std::vector<std::size_t> order(groups.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), trainer.rng());

        for (std::size_t idx : order) {
            const TrainingTriple triple = sample_triple(groups, idx, trainer.rng(), opts);
            LogRecord rec;
            rec.losses = trainer.train_step(triple);
            rec.step = trainer.global_step();
            rec.epoch = epoch;
            rec.lr = trainer.learning_rate();
            log << to_json_line(rec) << '\n';
            log.flush();
            if (on_step) on_step(rec);
            result.log.push_back(rec);
            if (t.max_steps > 0 && trainer.global_step() >= t.max_steps) {
                stopped = true;
                break;
            }
        }
        if (stopped) {
            trainer.set_epoch(epoch);
            char name[40];
            std::snprintf(name, sizeof(name), "step_%08ld.ckpt", trainer.global_step());
            save(out_dir / name);
            break;
        }
        trainer.set_epoch(epoch + 1);
        if ((epoch + 1) % t.checkpoint_every == 0 || epoch + 1 == t.epochs) save(out_dir / checkpoint_name(epoch + 1));
    }
    return result;
}

Generator load_generator(const fs::path& ckpt, RunConfig* cfg_out) {
    const TensorArchive ar = load_archive(ckpt);
    if (ar.meta.count("config") == 0) throw std::runtime_error("checkpoint has no config snapshot: " + ckpt.string());
    const RunConfig cfg = parse_run_config(ar.meta.at("config"));
    Generator g(cfg.generator);
    import_module(*g, "g.", ar);
    g->eval();
    if (cfg_out) *cfg_out = cfg;
    return g;
}

Image synthesize(Generator& g, const std::vector<Image>& sources, const PoseMap& pose) {
    torch::NoGradGuard no_grad;
    const auto dtype = g->parameters().front().scalar_type();
    std::vector<torch::Tensor> xs;
    for (const auto& s : sources) xs.push_back(image_to_tensor(s, dtype));
    return tensor_to_image(g->forward(xs, image_to_tensor(pose.pixels, dtype)));
}

}  // namespace posegen
