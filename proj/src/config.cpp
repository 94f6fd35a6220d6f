#include "posegen/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace posegen {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
    Int out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    return out;
}

struct Entry {
    ConfigKey info;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Entry int_entry(std::string key, std::string doc, Member member) {
    return {{key, std::move(doc)},
            [member](RunConfig& c, const std::string& k, const std::string& v) {
                auto& field = member(c);
                field = to_int<std::decay_t<decltype(field)>>(k, v);
            },
            [member](const RunConfig& c) { return std::to_string(member(c)); }};
}

template <typename Member>
Entry double_entry(std::string key, std::string doc, Member member) {
    return {{key, std::move(doc)},
            [member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = to_double(k, v); },
            [member](const RunConfig& c) { return fmt_double(member(c)); }};
}

template <typename Member>
Entry bool_entry(std::string key, std::string doc, Member member) {
    return {{key, std::move(doc)},
            [member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = to_bool(k, v); },
            [member](const RunConfig& c) { return std::string(member(c) ? "true" : "false"); }};
}

template <typename Member>
Entry string_entry(std::string key, std::string doc, Member member) {
    return {{key, std::move(doc)},
            [member](RunConfig& c, const std::string&, const std::string& v) { member(c) = v; },
            [member](const RunConfig& c) { return member(c); }};
}

#define FIELD(path) [](auto& c) -> auto& { return c.path; }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t;
        t.push_back(int_entry("generator.base_channels", "stem width; encoder widths are 1x/2x/4x this", FIELD(generator.base_channels)));
        t.push_back(int_entry("generator.n_res_blocks", "residual blocks after the stem", FIELD(generator.n_res_blocks)));
        t.push_back(int_entry("generator.lstm_hidden_channels", "bC-LSTM state channels and visual code width", FIELD(generator.lstm_hidden_channels)));
        t.push_back(int_entry("generator.image_height", "working height (multiple of 4)", FIELD(generator.image_height)));
        t.push_back(int_entry("generator.image_width", "working width (multiple of 4)", FIELD(generator.image_width)));
        t.push_back({{"generator.mode", "single | multi"},
                     [](RunConfig& c, const std::string&, const std::string& v) { c.generator.mode = parse_mode(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.generator.mode)); }});
        t.push_back(int_entry("disc.base_channels", "first discriminator layer width", FIELD(disc.base_channels)));
        t.push_back(int_entry("disc.n_layers", "stride-2 layers (3 gives a 70x70 receptive field)", FIELD(disc.n_layers)));
        t.push_back(string_entry("perceptual.weights_path", "named-tensor archive with VGG-19 weights; empty uses random weights", FIELD(perceptual.weights_path)));
        t.push_back(int_entry("perceptual.base_channels", "feature extractor width (64 = VGG-19)", FIELD(perceptual.base_channels)));
        t.push_back({{"perceptual.lambdas", "comma-separated weights for relu1_2,relu2_2,relu3_2,relu4_2"},
                     [](RunConfig& c, const std::string& k, const std::string& v) { c.perceptual.lambdas = to_list(k, v); },
                     [](const RunConfig& c) {
                         std::string out;
                         for (std::size_t i = 0; i < c.perceptual.lambdas.size(); ++i)
                             out += (i ? "," : "") + fmt_double(c.perceptual.lambdas[i]);
                         return out;
                     }});
        t.push_back(int_entry("perceptual.seed", "seed for the random-weight fallback extractor", FIELD(perceptual.seed)));
        t.push_back(string_entry("data.root", "dataset root containing train/ and test/", FIELD(data.root)));
        t.push_back(string_entry("data.split", "train | test", FIELD(data.split)));
        t.push_back(bool_entry("data.augment", "random crop/flip/rotate of every sampled item", FIELD(data.augment)));
        t.push_back(double_entry("data.crop_fraction", "crop side as a fraction of the frame", FIELD(data.crop_fraction)));
        t.push_back(double_entry("data.hflip_prob", "probability of a left-right flip", FIELD(data.hflip_prob)));
        t.push_back(double_entry("data.max_rotate", "maximum absolute rotation in degrees", FIELD(data.max_rotate)));
        t.push_back(int_entry("data.line_width", "pose-map limb width in pixels; 0 derives it from the height", FIELD(data.line_width)));
        t.push_back(double_entry("data.vis_threshold", "minimum keypoint confidence for drawing", FIELD(data.vis_threshold)));
        t.push_back(bool_entry("data.include_target_in_sources", "also feed the target image to the image encoder", FIELD(data.include_target_in_sources)));
        t.push_back(double_entry("train.lr0", "initial learning rate", FIELD(train.lr0)));
        t.push_back(double_entry("train.adam_beta1", "Adam beta1", FIELD(train.adam_beta1)));
        t.push_back(double_entry("train.adam_beta2", "Adam beta2", FIELD(train.adam_beta2)));
        t.push_back(int_entry("train.epochs", "passes over the SKU list", FIELD(train.epochs)));
        t.push_back(int_entry("train.decay_every", "epochs between learning-rate decays", FIELD(train.decay_every)));
        t.push_back(double_entry("train.decay_factor", "multiplicative learning-rate decay", FIELD(train.decay_factor)));
        t.push_back(double_entry("train.alpha", "weight of the image-realism adversarial term", FIELD(train.alpha)));
        t.push_back(double_entry("train.beta", "weight of the pose-consistency adversarial term", FIELD(train.beta)));
        t.push_back(int_entry("train.seed", "seed for initialization, shuffling and sampling", FIELD(train.seed)));
        t.push_back(int_entry("train.checkpoint_every", "epochs between checkpoints", FIELD(train.checkpoint_every)));
        t.push_back(int_entry("train.max_steps", "stop after this many steps; 0 = no cap", FIELD(train.max_steps)));
        t.push_back(bool_entry("train.use_d_i", "train and use the image discriminator", FIELD(train.use_d_i)));
        t.push_back(bool_entry("train.use_d_p", "train and use the pose-pair discriminator", FIELD(train.use_d_p)));
        t.push_back(bool_entry("train.saturating_g_loss", "generator minimizes log(1-D) instead of -log D", FIELD(train.saturating_g_loss)));
        t.push_back(bool_entry("train.adv_on_true_pose", "also show G(x,p) to the image discriminator", FIELD(train.adv_on_true_pose)));
        t.push_back(bool_entry("train.dp_mismatched_real", "treat real images with a foreign pose as inconsistent pairs", FIELD(train.dp_mismatched_real)));
        t.push_back(double_entry("train.grad_clip", "max gradient norm per network; 0 = off", FIELD(train.grad_clip)));
        t.push_back(string_entry("train.output_dir", "checkpoint and log directory", FIELD(train.output_dir)));
        return t;
    }();
    return table;
}

#undef FIELD

const Entry& find_entry(const std::string& key) {
    for (const auto& e : entries())
        if (e.info.key == key) return e;
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

Mode parse_mode(const std::string& s) {
    if (s == "single") return Mode::Single;
    if (s == "multi") return Mode::Multi;
    throw ConfigError("mode must be 'single' or 'multi', got '" + s + "'");
}

const char* to_string(Mode m) { return m == Mode::Single ? "single" : "multi"; }

void GeneratorConfig::validate() const {
    if (base_channels < 1) throw ConfigError("generator.base_channels must be >= 1");
    if (n_res_blocks < 1) throw ConfigError("generator.n_res_blocks must be >= 1");
    if (lstm_hidden_channels < 1) throw ConfigError("generator.lstm_hidden_channels must be > 0");
    if (image_height <= 0 || image_width <= 0 || image_height % kDownsampleFactor != 0 ||
        image_width % kDownsampleFactor != 0)
        throw ConfigError("generator image size must be positive and divisible by 4");
}

void DiscConfig::validate() const {
    if (base_channels < 1) throw ConfigError("disc.base_channels must be >= 1");
    if (n_layers < 1) throw ConfigError("disc.n_layers must be >= 1");
    if (in_channels < 1) throw ConfigError("disc in_channels must be >= 1");
}

void PerceptualConfig::validate() const {
    if (base_channels < 1) throw ConfigError("perceptual.base_channels must be >= 1");
    if (lambdas.size() != 4) throw ConfigError("perceptual.lambdas needs one weight per stage (4)");
    for (double l : lambdas)
        if (!(l >= 0)) throw ConfigError("perceptual.lambdas must be non-negative");
}

void TrainConfig::validate() const {
    if (!(lr0 > 0)) throw ConfigError("train.lr0 must be > 0");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw ConfigError("train.adam_beta1 must lie in [0,1)");
    if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw ConfigError("train.adam_beta2 must lie in [0,1)");
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (decay_every < 1) throw ConfigError("train.decay_every must be >= 1");
    if (!(decay_factor > 0)) throw ConfigError("train.decay_factor must be > 0");
    if (!(alpha >= 0) || !(beta >= 0)) throw ConfigError("train.alpha and train.beta must be >= 0");
    if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
    if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
    if (grad_clip < 0) throw ConfigError("train.grad_clip must be >= 0");
}

void RunConfig::validate() const {
    generator.validate();
    disc.validate();
    perceptual.validate();
    train.validate();
    if (!(data.crop_fraction > 0 && data.crop_fraction <= 1)) throw ConfigError("data.crop_fraction must lie in (0,1]");
    if (!(data.hflip_prob >= 0 && data.hflip_prob <= 1)) throw ConfigError("data.hflip_prob must lie in [0,1]");
    if (!(data.max_rotate >= 0)) throw ConfigError("data.max_rotate must be >= 0");
    if (data.line_width < 0) throw ConfigError("data.line_width must be >= 0");
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& e : entries()) out.push_back(e.info);
        return out;
    }();
    return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    find_entry(key).set(cfg, key, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return find_entry(key).get(cfg); }

RunConfig parse_run_config(const std::string& text, RunConfig base) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string to_text(const RunConfig& cfg) {
    std::string out;
    for (const auto& e : entries()) out += e.info.key + " = " + e.get(cfg) + "\n";
    return out;
}

}  // namespace posegen
