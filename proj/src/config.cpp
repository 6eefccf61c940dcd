#include "sfcl/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sfcl/csv.hpp"

namespace sfcl {

namespace {

double parse_double(const std::string& s) {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
}

long parse_long(const std::string& s) {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument(s);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& s, F&& one) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        // trim
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw std::invalid_argument(s);
        out.push_back(one(item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw std::invalid_argument(s);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& key_table() {
    static const std::map<std::string, Setter> table = {
        {"config_version", [](RunConfig& c, const std::string& v) { c.config_version = static_cast<int>(parse_long(v)); }},
        {"mode", [](RunConfig& c, const std::string& v) { c.mode = proto::mode_from_name(v); }},
        {"master_seed", [](RunConfig& c, const std::string& v) { c.master_seed = parse_u64(v); }},
        {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
        {"image_size", [](RunConfig& c, const std::string& v) { c.scene.height = c.scene.width = static_cast<int>(parse_long(v)); }},
        {"classes", [](RunConfig& c, const std::string& v) { c.scene.classes = static_cast<int>(parse_long(v)); }},
        {"min_axis", [](RunConfig& c, const std::string& v) { c.scene.min_axis = parse_double(v); }},
        {"max_axis", [](RunConfig& c, const std::string& v) { c.scene.max_axis = parse_double(v); }},
        {"intensities", [](RunConfig& c, const std::string& v) { c.scene.intensities = parse_list<double>(v, parse_double); }},
        {"shading", [](RunConfig& c, const std::string& v) { c.scene.shading = parse_double(v); }},
        {"pixel_noise_std", [](RunConfig& c, const std::string& v) { c.scene.pixel_noise_std = parse_double(v); }},
        {"blur_sigma_min", [](RunConfig& c, const std::string& v) { c.scene.blur_sigma_min = parse_double(v); }},
        {"blur_sigma_max", [](RunConfig& c, const std::string& v) { c.scene.blur_sigma_max = parse_double(v); }},
        {"min_class_frac", [](RunConfig& c, const std::string& v) { c.scene.min_class_frac = parse_double(v); }},
        {"client_counts", [](RunConfig& c, const std::string& v) { c.layout.client_counts = parse_list<long>(v, parse_long); }},
        {"corruption_ratios", [](RunConfig& c, const std::string& v) { c.layout.corruption_ratios = parse_list<double>(v, parse_double); }},
        {"test_count", [](RunConfig& c, const std::string& v) { c.layout.test_count = parse_long(v); }},
        {"rho", [](RunConfig& c, const std::string& v) { c.noise.rho = parse_double(v); }},
        {"a_min", [](RunConfig& c, const std::string& v) { c.noise.a_min = parse_double(v); }},
        {"amax_scale", [](RunConfig& c, const std::string& v) { c.noise.amax_scale = parse_double(v); }},
        {"delta", [](RunConfig& c, const std::string& v) { c.noise.delta = parse_double(v); }},
        {"epsilon", [](RunConfig& c, const std::string& v) { c.noise.epsilon = parse_double(v); }},
        {"band_coeff", [](RunConfig& c, const std::string& v) { c.noise.band_coeff = parse_double(v); }},
        {"fe_channels", [](RunConfig& c, const std::string& v) { c.fe_channels = static_cast<std::uint32_t>(parse_long(v)); }},
        {"s_channels", [](RunConfig& c, const std::string& v) { c.s_channels = static_cast<std::uint32_t>(parse_long(v)); }},
        {"local_epochs", [](RunConfig& c, const std::string& v) { c.local_epochs = static_cast<int>(parse_long(v)); }},
        {"batch_size", [](RunConfig& c, const std::string& v) { c.batch_size = static_cast<int>(parse_long(v)); }},
        {"global_rounds", [](RunConfig& c, const std::string& v) { c.global_rounds = static_cast<int>(parse_long(v)); }},
        {"warmup_rounds", [](RunConfig& c, const std::string& v) { c.warmup_rounds = static_cast<int>(parse_long(v)); }},
        {"lr", [](RunConfig& c, const std::string& v) { c.lr = parse_double(v); }},
        {"logit_lr", [](RunConfig& c, const std::string& v) { c.logit_lr = parse_double(v); }},
        {"tau0", [](RunConfig& c, const std::string& v) { c.tau0 = parse_double(v); }},
        {"label_T", [](RunConfig& c, const std::string& v) { c.label_T = parse_double(v); }},
        {"eta", [](RunConfig& c, const std::string& v) { c.eta = parse_double(v); }},
        {"teacher_ema_decay", [](RunConfig& c, const std::string& v) { c.teacher_ema_decay = parse_double(v); }},
        {"loss_ema_decay", [](RunConfig& c, const std::string& v) { c.loss_ema_decay = parse_double(v); }},
        {"noise_std", [](RunConfig& c, const std::string& v) { c.noise_std = parse_double(v); }},
        {"brightness", [](RunConfig& c, const std::string& v) { c.brightness = parse_double(v); }},
        {"logit_init", [](RunConfig& c, const std::string& v) { c.logit_init = parse_double(v); }},
        {"eval_every", [](RunConfig& c, const std::string& v) { c.eval_every = static_cast<int>(parse_long(v)); }},
        {"dump_dataset", [](RunConfig& c, const std::string& v) { c.dump_dataset = parse_bool(v); }},
        {"dump_label_samples", [](RunConfig& c, const std::string& v) { c.dump_label_samples = static_cast<int>(parse_long(v)); }},
    };
    return table;
}

}  // namespace

void RunConfig::validate() const {
    if (config_version != 1) throw ConfigError("config: unsupported config_version");
    scene.validate();
    layout.validate();
    noise.validate();
    if (fe_channels < 1 || s_channels < 1) throw ConfigError("config: channel counts must be >= 1");
    if (local_epochs < 1) throw ConfigError("config: local_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (global_rounds < 1) throw ConfigError("config: global_rounds must be >= 1");
    if (warmup_rounds < 1) throw ConfigError("config: warmup_rounds must be >= 1");
    if (!(lr > 0.0) || !(logit_lr > 0.0)) throw ConfigError("config: learning rates must be > 0");
    if (!(tau0 > 0.0)) throw ConfigError("config: tau0 must be > 0");
    if (!(label_T > 0.0) || label_T > 1.0)
        throw ConfigError("config: label_T must be in (0, 1]");
    if (eta < 0.0) throw ConfigError("config: eta must be >= 0");
    if (teacher_ema_decay < 0.0 || teacher_ema_decay > 1.0)
        throw ConfigError("config: teacher_ema_decay must be in [0,1]");
    if (loss_ema_decay < 0.0 || loss_ema_decay >= 1.0)
        throw ConfigError("config: loss_ema_decay must be in [0,1)");
    if (noise_std < 0.0 || brightness < 0.0)
        throw ConfigError("config: perturbation settings must be >= 0");
    if (eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
    if (dump_label_samples < 0) throw ConfigError("config: dump_label_samples must be >= 0");
}

proto::ProtoConfig RunConfig::to_proto() const {
    proto::ProtoConfig p;
    p.net.in_channels = 1;
    p.net.classes = static_cast<std::uint32_t>(scene.classes);
    p.net.fe_channels = fe_channels;
    p.net.s_channels = s_channels;
    p.mode = mode;
    p.local_epochs = local_epochs;
    p.batch_size = batch_size;
    p.lr = lr;
    p.logit_lr = logit_lr;
    p.tau0 = tau0;
    p.label_T = label_T;
    p.eta = eta;
    p.teacher_ema_decay = teacher_ema_decay;
    p.loss_ema_decay = loss_ema_decay;
    p.warmup_rounds = warmup_rounds;
    p.noise_std = noise_std;
    p.brightness = brightness;
    p.logit_init = logit_init;
    p.master_seed = master_seed;
    return p;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = key_table().find(key);
        if (it == key_table().end())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
        try {
            it->second(cfg, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": invalid value for '" + key + "': '" + value + "'");
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_env_overrides(RunConfig& cfg) {
    if (const char* s = std::getenv("SFCL_SEED")) {
        try {
            cfg.master_seed = parse_u64(s);
        } catch (const std::exception&) {
            throw ConfigError("SFCL_SEED: invalid seed value '" + std::string(s) + "'");
        }
    }
}

std::string default_config_text() {
    const RunConfig c;
    std::ostringstream o;
    o << "# SplitFed-CL run configuration, format version 1.\n";
    o << "# Flat `key = value` lines; '#' starts a comment; lists are\n";
    o << "# comma-separated. Unknown keys are rejected.\n\n";
    o << "config_version = " << c.config_version << "\n";
    o << "mode = " << proto::mode_name(c.mode) << "\n";
    o << "master_seed = " << c.master_seed << "\n";
    o << "out_dir = " << c.out_dir << "\n\n";
    o << "# scene\n";
    o << "image_size = " << c.scene.height << "\n";
    o << "classes = " << c.scene.classes << "\n";
    o << "min_axis = " << c.scene.min_axis << "\n";
    o << "max_axis = " << c.scene.max_axis << "\n";
    o << "intensities = 0.15, 0.55, 0.9\n";
    o << "shading = " << c.scene.shading << "\n";
    o << "pixel_noise_std = " << c.scene.pixel_noise_std << "\n";
    o << "blur_sigma_min = " << c.scene.blur_sigma_min << "\n";
    o << "blur_sigma_max = " << c.scene.blur_sigma_max << "\n";
    o << "min_class_frac = " << c.scene.min_class_frac << "\n\n";
    o << "# federation\n";
    o << "client_counts = 24, 36, 48, 12\n";
    o << "corruption_ratios = 0.2, 0.5, 0.8, 0.0\n";
    o << "test_count = " << c.layout.test_count << "\n\n";
    o << "# annotation noise\n";
    o << "rho = " << c.noise.rho << "\n";
    o << "a_min = " << c.noise.a_min << "\n";
    o << "amax_scale = " << c.noise.amax_scale << "\n";
    o << "delta = " << c.noise.delta << "\n";
    o << "band_coeff = " << c.noise.band_coeff << "\n\n";
    o << "# architecture\n";
    o << "fe_channels = " << c.fe_channels << "\n";
    o << "s_channels = " << c.s_channels << "\n\n";
    o << "# optimization & protocol\n";
    o << "local_epochs = " << c.local_epochs << "\n";
    o << "batch_size = " << c.batch_size << "\n";
    o << "global_rounds = " << c.global_rounds << "\n";
    o << "warmup_rounds = " << c.warmup_rounds << "\n";
    o << "lr = " << c.lr << "\n";
    o << "logit_lr = " << c.logit_lr << "\n";
    o << "tau0 = " << c.tau0 << "\n";
    o << "label_T = " << c.label_T << "\n";
    o << "eta = " << c.eta << "\n";
    o << "teacher_ema_decay = " << c.teacher_ema_decay << "\n";
    o << "loss_ema_decay = " << c.loss_ema_decay << "\n";
    o << "noise_std = " << c.noise_std << "\n";
    o << "brightness = " << c.brightness << "\n";
    o << "logit_init = " << c.logit_init << "\n\n";
    o << "# outputs\n";
    o << "eval_every = " << c.eval_every << "\n";
    o << "dump_dataset = " << (c.dump_dataset ? "true" : "false") << "\n";
    o << "dump_label_samples = " << c.dump_label_samples << "\n";
    return o.str();
}

}  // namespace sfcl
