#include "advprop/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "advprop/errors.hpp"

namespace advprop {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value '" + value + "' for " + key);
    }
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value '" + value + "' for " + key);
    }
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: bad boolean value '" + value + "' for " + key);
}

std::vector<std::size_t> parse_arch(const std::string& value) {
    std::vector<std::size_t> arch;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("config: empty entry in network.arch");
        arch.push_back(static_cast<std::size_t>(parse_u64(item, "network.arch")));
    }
    if (arch.size() < 2) throw ConfigError("config: network.arch needs at least 2 sizes");
    return arch;
}

std::string arch_to_string(const std::vector<std::size_t>& arch) {
    std::ostringstream os;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        if (i) os << ",";
        os << arch[i];
    }
    return os.str();
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RunMode mode_from_string(const std::string& s) {
    if (s == "standard") return RunMode::Standard;
    if (s == "adversarial") return RunMode::Adversarial;
    throw ConfigError("config: unknown mode '" + s + "' (standard|adversarial)");
}

DatasetKind dataset_from_string(const std::string& s) {
    if (s == "mnist") return DatasetKind::Mnist;
    if (s == "cifar10") return DatasetKind::Cifar10;
    throw ConfigError("config: unknown dataset '" + s + "' (mnist|cifar10)");
}

PreprocessKind preprocess_from_string(const std::string& s) {
    if (s == "none") return PreprocessKind::None;
    if (s == "scale01") return PreprocessKind::Scale01;
    if (s == "simple") return PreprocessKind::Simple;
    if (s == "zca") return PreprocessKind::Zca;
    if (s == "per_feature") return PreprocessKind::PerFeature;
    throw ConfigError("config: unknown preprocessing '" + s +
                      "' (none|scale01|simple|zca|per_feature)");
}

LrSchedule schedule_from_string(const std::string& s) {
    if (s == "none") return LrSchedule::None;
    if (s == "halve_on_plateau") return LrSchedule::HalveOnPlateau;
    throw ConfigError("config: unknown lr_schedule '" + s + "' (none|halve_on_plateau)");
}

}  // namespace

const char* to_string(RunMode m) {
    return m == RunMode::Standard ? "standard" : "adversarial";
}

const char* to_string(DatasetKind d) {
    return d == DatasetKind::Mnist ? "mnist" : "cifar10";
}

const char* to_string(PreprocessKind p) {
    switch (p) {
        case PreprocessKind::None: return "none";
        case PreprocessKind::Scale01: return "scale01";
        case PreprocessKind::Simple: return "simple";
        case PreprocessKind::Zca: return "zca";
        case PreprocessKind::PerFeature: return "per_feature";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (network.arch.size() < 2) {
        throw ConfigError("config: network.arch needs at least input and output sizes");
    }
    for (std::size_t s : network.arch) {
        if (s == 0) throw ConfigError("config: network.arch sizes must be positive");
    }
    if (network.activation == Activation::Softmax) {
        throw ConfigError("config: network.activation applies to hidden layers; softmax "
                          "is selected through loss=ce_softmax");
    }
    train.validate();
    if (train.epochs == 0) throw ConfigError("config: train.epochs must be positive");
    if (!(adversarial.epsilon >= 0.0) || !std::isfinite(adversarial.epsilon)) {
        throw ConfigError("config: adversarial.epsilon must be finite and non-negative");
    }
    if (dropout.enabled) {
        if (dropout.input_rate < 0.0 || dropout.input_rate >= 1.0 ||
            dropout.hidden_rate < 0.0 || dropout.hidden_rate >= 1.0) {
            throw ConfigError("config: dropout rates must lie in [0, 1)");
        }
    }
    if (!(data.zca_regularizer > 0.0)) {
        throw ConfigError("config: data.zca_regularizer must be positive");
    }
}

PreprocessCode ExperimentConfig::preprocess_code() const {
    switch (data.preprocessing) {
        case PreprocessKind::None: return PreprocessCode::Raw;
        case PreprocessKind::Scale01: return PreprocessCode::Scale01;
        case PreprocessKind::Simple: return PreprocessCode::Scale01Simple;
        case PreprocessKind::Zca: return PreprocessCode::Scale01Zca;
        case PreprocessKind::PerFeature: return PreprocessCode::Scale01PerFeature;
    }
    return PreprocessCode::Raw;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw_line;
    std::size_t line_no = 0;

    auto fail = [&](const std::string& msg) {
        throw ConfigError("config " + origin + ":" + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(in, raw_line)) {
        ++line_no;
        std::string line = trim(raw_line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> known = {"network", "train", "adversarial",
                                                        "dropout", "data", "output"};
            if (!known.count(section)) fail("unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail("expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail("key '" + key + "' outside any section");
        const std::string qual = section + "." + key;
        if (!seen.insert(qual).second) fail("duplicate key " + qual);

        if (qual == "network.arch") {
            cfg.network.arch = parse_arch(value);
        } else if (qual == "network.activation") {
            cfg.network.activation = activation_from_string(value);
        } else if (qual == "network.loss") {
            cfg.network.loss = loss_from_string(value);
        } else if (qual == "train.learning_rate") {
            cfg.train.learning_rate = parse_double(value, qual);
        } else if (qual == "train.batch_size") {
            cfg.train.batch_size = static_cast<std::size_t>(parse_u64(value, qual));
        } else if (qual == "train.epochs") {
            cfg.train.epochs = static_cast<std::size_t>(parse_u64(value, qual));
        } else if (qual == "train.momentum") {
            cfg.train.momentum = parse_double(value, qual);
        } else if (qual == "train.weight_decay") {
            cfg.train.weight_decay = parse_double(value, qual);
        } else if (qual == "train.max_norm") {
            if (value == "none") {
                cfg.train.max_norm.reset();
            } else {
                cfg.train.max_norm = parse_double(value, qual);
            }
        } else if (qual == "train.seed") {
            cfg.train.seed = parse_u64(value, qual);
        } else if (qual == "train.lr_schedule") {
            cfg.train.lr_schedule = schedule_from_string(value);
        } else if (qual == "adversarial.epsilon") {
            cfg.adversarial.epsilon = parse_double(value, qual);
        } else if (qual == "adversarial.mode") {
            cfg.adversarial.mode = mode_from_string(value);
        } else if (qual == "dropout.enabled") {
            cfg.dropout.enabled = parse_bool(value, qual);
        } else if (qual == "dropout.input_rate") {
            cfg.dropout.input_rate = parse_double(value, qual);
        } else if (qual == "dropout.hidden_rate") {
            cfg.dropout.hidden_rate = parse_double(value, qual);
        } else if (qual == "data.dataset") {
            cfg.data.dataset = dataset_from_string(value);
        } else if (qual == "data.preprocessing") {
            cfg.data.preprocessing = preprocess_from_string(value);
        } else if (qual == "data.validation_size") {
            cfg.data.validation_size = static_cast<std::size_t>(parse_u64(value, qual));
        } else if (qual == "data.zca_regularizer") {
            cfg.data.zca_regularizer = parse_double(value, qual);
        } else if (qual == "data.dir") {
            cfg.data.dir = value;
        } else if (qual == "output.dir") {
            cfg.output.dir = value;
        } else if (qual == "output.checkpoint_every") {
            cfg.output.checkpoint_every = static_cast<std::size_t>(parse_u64(value, qual));
        } else {
            fail("unknown key " + qual);
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream body;
    body << in.rdbuf();
    return parse_config_text(body.str(), path.filename().string());
}

namespace {

// Canonical key=value body shared by the manifest and the config hash.
// `for_hash` leaves out the run-local location fields.
std::string canonical_body(const ExperimentConfig& cfg, bool for_hash) {
    std::ostringstream os;
    os << "[network]\n";
    os << "arch = " << arch_to_string(cfg.network.arch) << "\n";
    os << "activation = " << to_string(cfg.network.activation) << "\n";
    os << "loss = " << to_string(cfg.network.loss) << "\n";
    os << "\n[train]\n";
    os << "learning_rate = " << fmt_double(cfg.train.learning_rate) << "\n";
    os << "batch_size = " << cfg.train.batch_size << "\n";
    os << "epochs = " << cfg.train.epochs << "\n";
    os << "momentum = " << fmt_double(cfg.train.momentum) << "\n";
    os << "weight_decay = " << fmt_double(cfg.train.weight_decay) << "\n";
    os << "max_norm = "
       << (cfg.train.max_norm ? fmt_double(*cfg.train.max_norm) : std::string("none"))
       << "\n";
    os << "seed = " << cfg.train.seed << "\n";
    os << "lr_schedule = "
       << (cfg.train.lr_schedule == LrSchedule::None ? "none" : "halve_on_plateau") << "\n";
    os << "\n[adversarial]\n";
    os << "epsilon = " << fmt_double(cfg.adversarial.epsilon) << "\n";
    os << "mode = " << to_string(cfg.adversarial.mode) << "\n";
    os << "\n[dropout]\n";
    os << "enabled = " << (cfg.dropout.enabled ? "true" : "false") << "\n";
    os << "input_rate = " << fmt_double(cfg.dropout.input_rate) << "\n";
    os << "hidden_rate = " << fmt_double(cfg.dropout.hidden_rate) << "\n";
    os << "\n[data]\n";
    os << "dataset = " << to_string(cfg.data.dataset) << "\n";
    os << "preprocessing = " << to_string(cfg.data.preprocessing) << "\n";
    os << "validation_size = " << cfg.data.validation_size << "\n";
    os << "zca_regularizer = " << fmt_double(cfg.data.zca_regularizer) << "\n";
    if (!for_hash) {
        os << "dir = " << cfg.data.dir << "\n";
        os << "\n[output]\n";
        os << "dir = " << cfg.output.dir << "\n";
        os << "checkpoint_every = " << cfg.output.checkpoint_every << "\n";
    }
    return os.str();
}

}  // namespace

std::string manifest_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "# run manifest: replaying this file with the same data reproduces the\n";
    os << "# checkpoint byte for byte.\n";
    os << "# fixed protocol choices:\n";
    os << "#   prng: splitmix64-seeded xoshiro256**, Box-Muller normals\n";
    os << "#   weight init: N(0, 0.01^2) layer by layer, row-major; biases zero\n";
    os << "#   gradient averaging: backward divides by the batch size\n";
    os << "#   lr plateau patience: 1 epoch; halving factor 0.5; at most 8 halvings\n";
    os << "#   adversarial dropout masks: drawn independently for both passes\n";
    os << "#   validation split: last validation_size samples in file order\n";
    os << "#   fgsm inputs are not clipped after perturbation\n";
    os << canonical_body(cfg, false);
    return os.str();
}

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << manifest_text(cfg);
    if (!out) throw FormatError("failed writing manifest " + path.string());
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string body = canonical_body(cfg, true);
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : body) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

namespace {

ExperimentConfig mnist_preset(std::size_t width, Activation act, double lr,
                              const std::string& name) {
    ExperimentConfig cfg;
    cfg.network.arch = {784, width, width, 10};
    cfg.network.activation = act;
    cfg.network.loss = Loss::CrossEntropyLogistic;
    cfg.train.learning_rate = lr;
    cfg.train.batch_size = 10;
    cfg.train.epochs = 150;
    cfg.train.momentum = 0.0;
    cfg.train.weight_decay = 0.0;
    cfg.train.max_norm.reset();
    cfg.train.seed = 1;
    cfg.train.lr_schedule = LrSchedule::None;
    cfg.adversarial.epsilon = 0.08;
    cfg.adversarial.mode = RunMode::Adversarial;
    cfg.dropout.enabled = false;
    cfg.data.dataset = DatasetKind::Mnist;
    cfg.data.preprocessing = PreprocessKind::Scale01;
    cfg.data.validation_size = 0;
    cfg.output.dir = "runs/" + name;
    return cfg;
}

ExperimentConfig cifar_fc_preset(PreprocessKind prep, bool adversarial, bool with_dropout,
                                 const std::string& name) {
    ExperimentConfig cfg;
    cfg.network.arch = {3072, 3000, 3000, 10};
    cfg.network.activation = Activation::Relu;
    cfg.network.loss = Loss::CrossEntropySoftmax;
    cfg.train.learning_rate = 0.1;
    cfg.train.batch_size = 128;
    cfg.train.epochs = 300;
    cfg.train.momentum = 0.0;
    cfg.train.weight_decay = 0.0;
    cfg.train.max_norm = 4.0;
    cfg.train.seed = 1;
    cfg.train.lr_schedule = LrSchedule::HalveOnPlateau;
    cfg.adversarial.epsilon = adversarial ? 0.03 : 0.0;
    cfg.adversarial.mode = adversarial ? RunMode::Adversarial : RunMode::Standard;
    cfg.dropout.enabled = with_dropout;
    cfg.dropout.input_rate = with_dropout ? 0.1 : 0.0;
    cfg.dropout.hidden_rate = with_dropout ? 0.5 : 0.0;
    cfg.data.dataset = DatasetKind::Cifar10;
    cfg.data.preprocessing = prep;
    cfg.data.validation_size = 0;
    cfg.output.dir = "runs/" + name;
    return cfg;
}

struct PresetEntry {
    std::string name;
    ExperimentConfig cfg;
};

std::vector<PresetEntry> build_presets() {
    std::vector<PresetEntry> entries;
    const struct {
        Activation act;
        const char* label;
        double lr;
    } kinds[] = {{Activation::Logistic, "logistic", 0.5},
                 {Activation::Tanh, "tanh", 0.01},
                 {Activation::Relu, "relu", 0.05}};
    for (const auto& k : kinds) {
        for (std::size_t width : {std::size_t(400), std::size_t(800), std::size_t(1200)}) {
            const std::string name =
                "mnist-" + std::string(k.label) + "-2x" + std::to_string(width);
            entries.push_back({name, mnist_preset(width, k.act, k.lr, name)});
        }
    }
    const struct {
        PreprocessKind prep;
        const char* label;
    } preps[] = {{PreprocessKind::Zca, "zca"}, {PreprocessKind::Simple, "simple"}};
    for (const auto& p : preps) {
        const std::string base = "cifar-fc-2x3000-" + std::string(p.label);
        entries.push_back({base, cifar_fc_preset(p.prep, true, false, base)});
        entries.push_back(
            {base + "-dropout", cifar_fc_preset(p.prep, true, true, base + "-dropout")});
        entries.push_back(
            {base + "-backprop", cifar_fc_preset(p.prep, false, false, base + "-backprop")});
        entries.push_back({base + "-backprop-dropout",
                           cifar_fc_preset(p.prep, false, true, base + "-backprop-dropout")});
    }
    return entries;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
    for (const PresetEntry& entry : build_presets()) {
        if (entry.name == name) return entry.cfg;
    }
    std::string names;
    for (const auto& n : preset_names()) names += "\n  " + n;
    throw ConfigError("unknown preset '" + name + "'; available presets:" + names);
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const PresetEntry& entry : build_presets()) names.push_back(entry.name);
    return names;
}

}  // namespace advprop
