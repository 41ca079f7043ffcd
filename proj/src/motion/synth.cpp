#include "tm2d/motion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tm2d/common/errors.hpp"
#include "tm2d/numerics/rng.hpp"

namespace tm2d::motion {

namespace {

using num::Rng;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t frames_for(double seconds, const SynthConfig& cfg) {
    const auto ds = static_cast<double>(cfg.downsample);
    const auto blocks = static_cast<std::size_t>(std::llround(seconds * cfg.fps / ds));
    return std::max<std::size_t>(blocks, 1) * cfg.downsample;
}

MotionSequence rest_motion(std::size_t frames, double fps) {
    MotionSequence m(frames, kMotionWidth, fps);
    const auto& rest = rest_pose();
    for (std::size_t t = 0; t < frames; ++t) {
        std::copy(rest.begin(), rest.end(), m.frame(t).begin());
    }
    return m;
}

double joint_amplitude(std::size_t joint, Rng& rng) {
    switch (joint) {
        case kHead:
            return rng.uniform(0.02, 0.06);
        case kLeftHand:
        case kRightHand:
            return rng.uniform(0.06, 0.22);
        case kLeftKnee:
        case kRightKnee:
            return rng.uniform(0.02, 0.08);
        default:
            return rng.uniform(0.01, 0.06);
    }
}

CorpusItem make_dance_item(Rng& rng, const SynthConfig& cfg) {
    const double seconds = rng.uniform(cfg.dance_min_seconds, cfg.dance_max_seconds);
    const std::size_t frames = frames_for(seconds, cfg);
    const double duration = static_cast<double>(frames) / cfg.fps;
    const double tempo = rng.uniform(cfg.min_tempo_hz, cfg.max_tempo_hz);
    const double beat_offset = rng.uniform(0.0, 1.0 / tempo);

    std::vector<double> beats;
    for (double b = beat_offset; b < duration; b += 1.0 / tempo) {
        beats.push_back(b);
    }

    // Slow sway of the root plus a bounce locked to the beat grid (lowest
    // point on every beat).
    const double sway_hz = rng.uniform(0.05, 0.15);
    const double sway_x = rng.uniform(0.05, 0.2);
    const double sway_z = rng.uniform(0.05, 0.2);
    const double sway_px = rng.uniform(0.0, kTwoPi);
    const double sway_pz = rng.uniform(0.0, kTwoPi);
    const double bounce = rng.uniform(0.03, 0.08);

    // Limbs oscillate at the tempo; each limb pair shares a base phase so
    // joints move in a coupled way.
    std::array<double, kMotionWidth> amp{};
    std::array<double, kMotionWidth> phase{};
    const std::array<double, 4> group_phase = {rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi),
                                               rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)};
    auto group_of = [](std::size_t j) -> std::size_t {
        switch (j) {
            case kHead:
                return 0;
            case kLeftHand:
            case kRightHand:
                return 1;
            case kLeftKnee:
            case kRightKnee:
                return 2;
            default:
                return 3;
        }
    };
    for (std::size_t j = 1; j < kNumJoints; ++j) {
        const double a = joint_amplitude(j, rng);
        for (std::size_t axis = 0; axis < 3; ++axis) {
            amp[j * 3 + axis] = a * rng.uniform(0.3, 1.0);
            phase[j * 3 + axis] = group_phase[group_of(j)] + rng.uniform(-0.4, 0.4);
        }
    }

    MotionSequence m = rest_motion(frames, cfg.fps);
    const auto& rest = rest_pose();
    for (std::size_t t = 0; t < frames; ++t) {
        const double time = static_cast<double>(t) / cfg.fps;
        const double beat_phase = kTwoPi * tempo * (time - beat_offset);
        const double rx = sway_x * std::sin(kTwoPi * sway_hz * time + sway_px);
        const double rz = sway_z * std::sin(kTwoPi * sway_hz * time + sway_pz);
        const double ry = -bounce * std::cos(beat_phase);
        for (std::size_t j = 0; j < kNumJoints; ++j) {
            for (std::size_t axis = 0; axis < 3; ++axis) {
                const std::size_t k = j * 3 + axis;
                double v = rest[k] + (axis == 0 ? rx : axis == 1 ? ry : rz);
                if (j != kRoot) {
                    v += amp[k] * std::sin(beat_phase + phase[k]);
                }
                m.data[t * kMotionWidth + k] = v;
            }
        }
    }

    CorpusItem item;
    item.motion = std::move(m);
    item.audio = synth_audio_features(beats, duration, cfg.token_rate(), rng.next_u64(), cfg.audio_dims);
    item.label = "dance";
    return item;
}

const char* side_word(bool left) { return left ? "left" : "right"; }

}  // namespace

std::string to_string(Provenance p) { return p == Provenance::kDance ? "dance" : "action"; }

Provenance provenance_from_string(const std::string& s) {
    if (s == "dance") {
        return Provenance::kDance;
    }
    if (s == "action") {
        return Provenance::kAction;
    }
    throw ConfigError("unknown corpus kind '" + s + "' (expected dance or action)");
}

void Corpus::validate() const {
    for (const auto& item : items) {
        item.motion.validate();
        if (item.audio.has_value() && item.text.has_value()) {
            throw ContractError("corpus item carries both audio and text");
        }
        if (provenance == Provenance::kDance && !item.audio.has_value()) {
            throw ContractError("dance item without audio");
        }
        if (provenance == Provenance::kAction && !item.text.has_value()) {
            throw ContractError("action item without text");
        }
    }
}

const std::vector<std::string>& action_primitives() {
    static const std::vector<std::string> names = {"jump", "spin", "walk", "wave", "crouch", "kick"};
    return names;
}

MotionSequence synth_action(const std::string& primitive, double seconds, std::uint64_t seed, const SynthConfig& cfg,
                            std::string* text) {
    Rng rng(seed, 0x5eed);
    const std::size_t frames = frames_for(seconds, cfg);
    MotionSequence m = rest_motion(frames, cfg.fps);
    const bool left = rng.uniform() < 0.5;
    const std::size_t variant = rng.below(3);
    std::string description;

    auto offset = [&](std::size_t t, std::size_t joint, double dx, double dy, double dz) {
        m.at(t, joint, 0) += dx;
        m.at(t, joint, 1) += dy;
        m.at(t, joint, 2) += dz;
    };

    if (primitive == "jump") {
        const double f = rng.uniform(0.6, 1.2);
        const double height = rng.uniform(0.25, 0.45);
        for (std::size_t t = 0; t < frames; ++t) {
            const double time = static_cast<double>(t) / cfg.fps;
            const double lift = height * std::max(0.0, std::sin(kTwoPi * f * time));
            for (std::size_t j = 0; j < kNumJoints; ++j) {
                offset(t, j, 0.0, lift, 0.0);
            }
            offset(t, kLeftHand, 0.0, 0.6 * lift, 0.0);
            offset(t, kRightHand, 0.0, 0.6 * lift, 0.0);
        }
        const char* texts[] = {"a person jumps up and down", "someone jumps in place",
                               "the person jumps high into the air"};
        description = texts[variant];
    } else if (primitive == "spin") {
        const double omega = rng.uniform(1.5, 3.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        const double arms_out = rng.uniform(0.05, 0.2);
        for (std::size_t t = 0; t < frames; ++t) {
            const double theta = omega * static_cast<double>(t) / cfg.fps;
            const double c = std::cos(theta), s = std::sin(theta);
            m.at(t, kLeftHand, 0) += arms_out;
            m.at(t, kRightHand, 0) -= arms_out;
            const double rx = m.at(t, kRoot, 0), rz = m.at(t, kRoot, 2);
            for (std::size_t j = 1; j < kNumJoints; ++j) {
                const double x = m.at(t, j, 0) - rx, z = m.at(t, j, 2) - rz;
                m.at(t, j, 0) = rx + c * x + s * z;
                m.at(t, j, 2) = rz - s * x + c * z;
            }
        }
        const char* texts[] = {"a person spins around", "someone turns around in a circle",
                               "the person spins slowly in place"};
        description = texts[variant];
    } else if (primitive == "walk") {
        const double period = rng.uniform(4.0, 7.0);
        const double reach = rng.uniform(0.5, 0.9);
        const double step_hz = rng.uniform(1.4, 2.0);
        for (std::size_t t = 0; t < frames; ++t) {
            const double time = static_cast<double>(t) / cfg.fps;
            const double root_z = reach * std::sin(kTwoPi * time / period);
            const double sw = std::sin(kTwoPi * step_hz * time);
            for (std::size_t j = 0; j < kNumJoints; ++j) {
                offset(t, j, 0.0, 0.0, root_z);
            }
            offset(t, kRoot, 0.0, 0.02 * std::abs(sw), 0.0);
            offset(t, kLeftFoot, 0.0, 0.08 * std::max(0.0, sw), 0.25 * sw);
            offset(t, kRightFoot, 0.0, 0.08 * std::max(0.0, -sw), -0.25 * sw);
            offset(t, kLeftKnee, 0.0, 0.04 * std::max(0.0, sw), 0.15 * sw);
            offset(t, kRightKnee, 0.0, 0.04 * std::max(0.0, -sw), -0.15 * sw);
            offset(t, kLeftHand, 0.0, 0.0, -0.15 * sw);
            offset(t, kRightHand, 0.0, 0.0, 0.15 * sw);
        }
        const char* texts[] = {"a person walks forward and back", "someone walks back and forth",
                               "the person walks forward slowly"};
        description = texts[variant];
    } else if (primitive == "wave") {
        const double wave_hz = rng.uniform(1.0, 2.0);
        const double width = rng.uniform(0.15, 0.3);
        const std::size_t hand = left ? kLeftHand : kRightHand;
        const double sign = left ? 1.0 : -1.0;
        for (std::size_t t = 0; t < frames; ++t) {
            const double time = static_cast<double>(t) / cfg.fps;
            const double raise = std::min(1.0, time / 0.5);  // arm comes up over half a second
            m.at(t, hand, 1) += raise * 0.75;
            m.at(t, hand, 0) += raise * (-sign * 0.05 + sign * width * std::sin(kTwoPi * wave_hz * time));
        }
        const std::string s = side_word(left);
        const std::string texts[] = {"a person waves the " + s + " hand", "someone raises the " + s + " hand and waves",
                                     "the person waves hello with the " + s + " arm"};
        description = texts[variant];
    } else if (primitive == "crouch") {
        const double depth = rng.uniform(0.3, 0.5);
        const double f = rng.uniform(0.25, 0.5);
        for (std::size_t t = 0; t < frames; ++t) {
            const double time = static_cast<double>(t) / cfg.fps;
            const double c = depth * 0.5 * (1.0 - std::cos(kTwoPi * f * time));
            offset(t, kRoot, 0.0, -c, -0.2 * c);
            offset(t, kHead, 0.0, -c, 0.1 * c);
            offset(t, kLeftHand, 0.0, -0.8 * c, 0.3 * c);
            offset(t, kRightHand, 0.0, -0.8 * c, 0.3 * c);
            offset(t, kLeftKnee, 0.0, -0.5 * c, 0.4 * c);
            offset(t, kRightKnee, 0.0, -0.5 * c, 0.4 * c);
        }
        const char* texts[] = {"a person crouches down", "someone squats down and stands up",
                               "the person bends the knees and crouches"};
        description = texts[variant];
    } else if (primitive == "kick") {
        const double f = rng.uniform(0.5, 0.9);
        const double reach = rng.uniform(0.45, 0.65);
        const std::size_t foot = left ? kLeftFoot : kRightFoot;
        const std::size_t knee = left ? kLeftKnee : kRightKnee;
        for (std::size_t t = 0; t < frames; ++t) {
            const double time = static_cast<double>(t) / cfg.fps;
            const double s = std::max(0.0, std::sin(kTwoPi * f * time));
            const double k = s * s;
            offset(t, foot, 0.0, 0.35 * k, reach * k);
            offset(t, knee, 0.0, 0.2 * k, 0.5 * reach * k);
            offset(t, kLeftHand, 0.0, 0.1 * k, -0.15 * k);
            offset(t, kRightHand, 0.0, 0.1 * k, -0.15 * k);
            offset(t, kRoot, 0.0, 0.0, -0.05 * k);
        }
        const std::string sd = side_word(left);
        const std::string texts[] = {"a person kicks with the " + sd + " leg",
                                     "someone kicks forward with the " + sd + " foot", "the person does a " + sd + " kick"};
        description = texts[variant];
    } else {
        throw ConfigError("unknown action primitive '" + primitive + "'");
    }
    if (text != nullptr) {
        *text = description;
    }
    return m;
}

Corpus synth_dance_corpus(std::size_t n, std::uint64_t seed, const SynthConfig& cfg) {
    if (n < 1) {
        throw ConfigError("synth_dance_corpus: n must be >= 1");
    }
    Rng root(seed, 0xda9ce);
    Corpus corpus;
    corpus.provenance = Provenance::kDance;
    for (std::size_t i = 0; i < n; ++i) {
        Rng item_rng = root.fork(i);
        corpus.items.push_back(make_dance_item(item_rng, cfg));
    }
    return corpus;
}

Corpus synth_action_corpus(std::size_t n, std::uint64_t seed, const SynthConfig& cfg) {
    if (n < 1) {
        throw ConfigError("synth_action_corpus: n must be >= 1");
    }
    Rng root(seed, 0xac7107);
    Corpus corpus;
    corpus.provenance = Provenance::kAction;
    const auto& prims = action_primitives();
    for (std::size_t i = 0; i < n; ++i) {
        Rng item_rng = root.fork(i);
        const std::string& prim = prims[i % prims.size()];
        const double seconds = item_rng.uniform(cfg.action_min_seconds, cfg.action_max_seconds);
        CorpusItem item;
        std::string text;
        item.motion = synth_action(prim, seconds, item_rng.next_u64(), cfg, &text);
        item.text = std::move(text);
        item.label = prim;
        corpus.items.push_back(std::move(item));
    }
    return corpus;
}

AudioFeatureSeq synth_audio_features(const std::vector<double>& beat_times, double duration, double rate,
                                     std::uint64_t seed, std::size_t dims) {
    if (!(rate > 0.0)) {
        throw ConfigError("synth_audio_features: rate must be positive");
    }
    if (dims < 3) {
        throw ConfigError("synth_audio_features: need at least 3 channels");
    }
    for (double b : beat_times) {
        if (b < 0.0 || b > duration) {
            throw RangeError("beat at " + std::to_string(b) + " s lies outside [0, " + std::to_string(duration) + "]");
        }
    }
    AudioFeatureSeq a;
    a.frames = static_cast<std::size_t>(std::llround(duration * rate));
    a.dims = dims;
    a.rate = rate;
    a.beat_times = beat_times;
    std::sort(a.beat_times.begin(), a.beat_times.end());
    a.data.assign(a.frames * dims, 0.0);
    if (a.frames == 0) {
        return a;
    }

    for (double b : a.beat_times) {
        const auto f = std::min<std::size_t>(static_cast<std::size_t>(std::llround(b * rate)), a.frames - 1);
        a.data[f * dims] = 1.0;
    }

    constexpr double kOnsetDecay = 0.2;  // seconds
    std::size_t next_beat = 0;
    double last_beat = -1.0;
    for (std::size_t f = 0; f < a.frames; ++f) {
        const double t = static_cast<double>(f) / rate;
        while (next_beat < a.beat_times.size() && a.beat_times[next_beat] <= t) {
            last_beat = a.beat_times[next_beat++];
        }
        a.data[f * dims + 1] = last_beat < 0.0 ? 0.0 : std::exp(-(t - last_beat) / kOnsetDecay);
    }

    // Band-limited noise: a few random low-frequency partials per channel.
    num::Rng rng(seed, 0xa0d10);
    const double max_hz = std::min(1.0, 0.4 * rate);
    for (std::size_t c = 2; c < dims; ++c) {
        double freq[3], amp[3], ph[3];
        for (int q = 0; q < 3; ++q) {
            freq[q] = rng.uniform(0.05, max_hz);
            amp[q] = rng.uniform(0.1, 0.35);
            ph[q] = rng.uniform(0.0, kTwoPi);
        }
        for (std::size_t f = 0; f < a.frames; ++f) {
            const double t = static_cast<double>(f) / rate;
            double v = 0.0;
            for (int q = 0; q < 3; ++q) {
                v += amp[q] * std::sin(kTwoPi * freq[q] * t + ph[q]);
            }
            a.data[f * dims + c] = v;
        }
    }
    return a;
}

std::vector<MotionSequence> window_motion(const MotionSequence& m, std::size_t window, std::size_t stride) {
    if (window == 0 || stride == 0) {
        throw ConfigError("window_motion: window and stride must be >= 1");
    }
    if (m.frames < window) {
        throw RangeError("window_motion: motion of T=" + std::to_string(m.frames) + " frames is shorter than window " +
                         std::to_string(window));
    }
    std::vector<MotionSequence> out;
    const std::size_t count = (m.frames - window) / stride + 1;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(m.slice(i * stride, i * stride + window));
    }
    return out;
}

}  // namespace tm2d::motion
