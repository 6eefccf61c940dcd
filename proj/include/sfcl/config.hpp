#pragma once

#include <string>

#include "sfcl/annsim.hpp"
#include "sfcl/data.hpp"
#include "sfcl/protocol.hpp"

// Run configuration: a flat, typed `key = value` text file (format version
// 1, '#' comments). Every key is listed in config.cpp; unknown keys and
// malformed values are rejected with the offending line number.

namespace sfcl {

struct RunConfig {
    int config_version = 1;
    proto::Mode mode = proto::Mode::splitfed_cl;
    std::uint64_t master_seed = 1;
    std::string out_dir = "run_out";

    data::SceneConfig scene;
    data::FederationLayout layout;
    // a_max = w matches real-image scales; at 64x64 the SDF quantum is a
    // whole pixel, so the desk-scale default scales the amplitude up and
    // widens the normal sampling offset to keep the injected corruption
    // visible.
    annsim::DifficultyParams noise{.amax_scale = 12.0, .delta = 3.0};

    std::uint32_t fe_channels = 8;
    std::uint32_t s_channels = 16;

    int local_epochs = 5;
    int batch_size = 2;
    int global_rounds = 100;
    int warmup_rounds = 20;
    double lr = 1e-4;
    double logit_lr = 1e-3;
    double tau0 = 10.0;
    double label_T = 0.9;
    double eta = 5e-4;
    double teacher_ema_decay = 0.99;
    double loss_ema_decay = 0.9;
    double noise_std = 0.05;
    double brightness = 0.1;
    double logit_init = -10.0;

    int eval_every = 1;
    bool dump_dataset = false;
    int dump_label_samples = 4;

    void validate() const;  // throws ConfigError
    proto::ProtoConfig to_proto() const;
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);  // for tests

// SFCL_SEED overrides master_seed when set.
void apply_env_overrides(RunConfig& cfg);

// The config the file format documents as its defaults, serialized; writing
// this out and parsing it again yields the same RunConfig.
std::string default_config_text();

}  // namespace sfcl
