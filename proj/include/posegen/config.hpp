#pragma once

/// \file config.hpp
/// \brief Typed configuration blocks and the flat dotted key=value run config.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace posegen {

/// single: one source image per step; multi: the remaining images of the SKU.
enum class Mode { Single, Multi };

Mode parse_mode(const std::string& s);
const char* to_string(Mode m);

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct GeneratorConfig {
    static constexpr int kDownsampleFactor = 4;

    int base_channels = 64;
    int n_res_blocks = 6;
    int lstm_hidden_channels = 256;
    int image_height = 256;
    int image_width = 256;
    Mode mode = Mode::Multi;

    void validate() const;
};

struct DiscConfig {
    int base_channels = 64;
    int n_layers = 3;
    int in_channels = 3;

    void validate() const;
};

struct PerceptualConfig {
    std::string weights_path;  ///< empty: seeded random weights
    int base_channels = 64;    ///< 64 gives the standard VGG-19 widths
    std::vector<double> lambdas{1.0, 1.0, 1.0, 1.0};
    std::uint64_t seed = 1234;

    void validate() const;
};

struct DataConfig {
    std::string root;
    std::string split = "train";
    bool augment = true;
    double crop_fraction = 0.9;
    double hflip_prob = 0.5;
    double max_rotate = 10.0;
    int line_width = 0;  ///< 0: derived from the working height
    double vis_threshold = 0.1;
    bool include_target_in_sources = false;
};

struct TrainConfig {
    double lr0 = 1e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    int epochs = 200;
    int decay_every = 50;
    double decay_factor = 0.5;
    double alpha = 1.0;
    double beta = 1.0;
    std::uint64_t seed = 0;
    int checkpoint_every = 10;
    long max_steps = 0;  ///< 0: no cap
    bool use_d_i = true;
    bool use_d_p = true;
    bool saturating_g_loss = false;
    bool adv_on_true_pose = false;
    bool dp_mismatched_real = false;
    double grad_clip = 0.0;  ///< 0: off
    std::string output_dir = "runs/default";

    void validate() const;
};

struct RunConfig {
    GeneratorConfig generator;
    DiscConfig disc;
    PerceptualConfig perceptual;
    DataConfig data;
    TrainConfig train;

    void validate() const;
};

struct ConfigKey {
    std::string key;
    std::string doc;
};

/// Every recognized key with its documentation, in file order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key; throws ConfigError naming the key if unknown or malformed.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Parses `key = value` lines; `#` starts a comment. Later lines win.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Serializes every key; parse_run_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

}  // namespace posegen
