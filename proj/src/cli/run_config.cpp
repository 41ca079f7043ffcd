#include "tm2d/cli/run_config.hpp"

#include <sstream>

#include "tm2d/common/errors.hpp"
#include "tm2d/common/textio.hpp"

namespace tm2d::cli {

RunConfig RunConfig::defaults() {
    RunConfig c;
    const auto i = Kind::kInt;
    const auto d = Kind::kDouble;
    const auto s = Kind::kString;
    c.declare("seed", i, "1");

    c.declare("vq.K", i, "1024");
    c.declare("vq.d", i, "128");
    c.declare("vq.hidden", i, "64");
    c.declare("vq.beta", d, "0.25");
    c.declare("vq.use_bias", i, "1");
    c.declare("vq.steps", i, "5000");
    c.declare("vq.batch", i, "128");
    c.declare("vq.lr", d, "0.0001");
    c.declare("vq.window", i, "64");
    c.declare("vq.stride", i, "16");
    c.declare("vq.epoch_steps", i, "0");

    c.declare("xm.width", i, "64");
    c.declare("xm.layers", i, "6");
    c.declare("xm.heads", i, "4");
    c.declare("xm.ff_hidden", i, "0");
    c.declare("xm.steps", i, "2000");
    c.declare("xm.batch", i, "64");
    c.declare("xm.lr", d, "0.0001");
    c.declare("xm.max_tokens", i, "32");
    c.declare("xm.text_weight", d, "1");

    c.declare("gen.top_k", i, "10");
    c.declare("gen.fusion_peak", d, "0.8");
    c.declare("gen.fusion_ramp", d, "0.2");
    c.declare("gen.fusion_locus", s, "features");

    c.declare("metric.freeze_speed", d, "0.015");
    c.declare("metric.freeze_duration", d, "3");
    c.declare("metric.auc_max", d, "0.03");
    c.declare("metric.beat_sigma", d, "3");
    c.declare("metric.div_pairs", i, "0");
    c.declare("metric.mpd_k", i, "10");
    c.declare("metric.mpd_past", i, "60");
    c.declare("metric.mpd_future", i, "30");
    c.declare("metric.mpd_stride", i, "4");

    c.declare("paths.corpora", s, "");
    c.declare("paths.out", s, "");
    return c;
}

void RunConfig::declare(const std::string& key, Kind kind, const std::string& value) {
    entries_[key] = Entry{kind, value};
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    const std::string v = trim(value);
    try {
        if (it->second.kind == Kind::kInt) {
            parse_int(v);
        } else if (it->second.kind == Kind::kDouble) {
            parse_double(v);
        }
    } catch (const FormatError&) {
        throw ConfigError("config key '" + key + "' expects a " +
                          (it->second.kind == Kind::kInt ? std::string("integer") : std::string("number")) +
                          ", got '" + v + "'");
    }
    it->second.value = v;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
        }
        set(trim(t.substr(0, eq)), t.substr(eq + 1));
    }
}

void RunConfig::merge_file(const std::string& path) { merge_text(read_file(path), path); }

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "' is not key=value");
    }
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    return it->second.value;
}

long long RunConfig::get_int(const std::string& key) const { return parse_int(get(key)); }

std::size_t RunConfig::get_size(const std::string& key) const {
    const long long v = get_int(key);
    if (v < 0) {
        throw ConfigError("config key '" + key + "' must be >= 0, got " + std::to_string(v));
    }
    return static_cast<std::size_t>(v);
}

double RunConfig::get_double(const std::string& key) const { return parse_double(get(key)); }

std::string RunConfig::format() const {
    std::ostringstream out;
    for (const auto& [key, entry] : entries_) {
        out << key << "=" << entry.value << "\n";
    }
    return out.str();
}

vq::VqVaeConfig RunConfig::vq_model() const {
    vq::VqVaeConfig c;
    c.codebook_size = get_size("vq.K");
    c.latent_dim = get_size("vq.d");
    c.hidden = get_size("vq.hidden");
    c.beta = get_double("vq.beta");
    c.use_bias = get_int("vq.use_bias") != 0;
    c.seed = static_cast<std::uint64_t>(get_int("seed"));
    c.validate();
    return c;
}

vq::VqTrainConfig RunConfig::vq_train() const {
    vq::VqTrainConfig c;
    c.steps = get_size("vq.steps");
    c.batch = get_size("vq.batch");
    c.lr = get_double("vq.lr");
    c.window = get_size("vq.window");
    c.stride = get_size("vq.stride");
    c.epoch_steps = get_size("vq.epoch_steps");
    c.seed = static_cast<std::uint64_t>(get_int("seed"));
    if (c.stride == 0) {
        throw ConfigError("vq.stride must be >= 1");
    }
    return c;
}

xm::XmConfig RunConfig::xm_model(std::size_t codebook_size) const {
    xm::XmConfig c;
    c.codebook_size = codebook_size;
    c.width = get_size("xm.width");
    c.layers = get_size("xm.layers");
    c.heads = get_size("xm.heads");
    c.ff_hidden = get_size("xm.ff_hidden");
    c.seed = static_cast<std::uint64_t>(get_int("seed"));
    c.validate();
    return c;
}

xm::XmTrainConfig RunConfig::xm_train() const {
    xm::XmTrainConfig c;
    c.steps = get_size("xm.steps");
    c.batch = get_size("xm.batch");
    c.lr = get_double("xm.lr");
    c.max_tokens = get_size("xm.max_tokens");
    c.text_weight = get_double("xm.text_weight");
    c.seed = static_cast<std::uint64_t>(get_int("seed"));
    return c;
}

fusion::FusionSchedule RunConfig::fusion_schedule(double start, double duration) const {
    fusion::FusionSchedule s;
    s.effect_start = start;
    s.effect_duration = duration;
    s.peak = get_double("gen.fusion_peak");
    s.ramp_fraction = get_double("gen.fusion_ramp");
    s.validate();
    return s;
}

}  // namespace tm2d::cli
