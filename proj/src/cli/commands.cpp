#include "tm2d/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "tm2d/analysis/usage.hpp"
#include "tm2d/common/errors.hpp"
#include "tm2d/common/textio.hpp"
#include "tm2d/metrics/beats.hpp"
#include "tm2d/metrics/fid.hpp"
#include "tm2d/metrics/freeze.hpp"
#include "tm2d/metrics/mpd.hpp"
#include "tm2d/motion/io.hpp"
#include "tm2d/motion/text.hpp"
#include "tm2d/numerics/ops.hpp"

namespace fs = std::filesystem;

namespace tm2d::cli {

namespace {

constexpr const char* kManifest = "manifest.txt";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ConfigError(what);
    }
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string strip_extension(const std::string& path, const std::string& ext) {
    if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
        return path.substr(0, path.size() - ext.size());
    }
    return path;
}

std::vector<std::string> corpus_dirs(const TrainOptions& opt, const RunConfig& cfg) {
    std::vector<std::string> dirs = opt.data;
    if (dirs.empty()) {
        for (const auto& d : split_ws(cfg.get("paths.corpora"))) {
            dirs.push_back(d);
        }
    }
    require(!dirs.empty(), "no training corpora given (use --data or paths.corpora)");
    return dirs;
}

std::string out_dir(const std::string& flag, const RunConfig& cfg) {
    const std::string out = flag.empty() ? cfg.get("paths.out") : flag;
    require(!out.empty(), "no output location given (use --out or paths.out)");
    return out;
}

Checkpoint load_kind(const std::string& path, const std::string& kind) {
    Checkpoint ckpt = load_checkpoint(path);
    if (!ckpt.has("kind") || ckpt.get("kind") != kind) {
        throw FormatError(path + ": not a " + kind + " checkpoint");
    }
    return ckpt;
}

std::size_t progress_every(std::size_t steps) { return std::max<std::size_t>(1, steps / 10); }

std::string vq_log_csv(const std::vector<vq::VqStepLog>& log) {
    std::ostringstream out;
    out << "step,loss,reconstruction,codebook,commitment\n";
    for (const auto& e : log) {
        out << e.step << "," << format_double(e.loss) << "," << format_double(e.reconstruction) << ","
            << format_double(e.codebook) << "," << format_double(e.commitment) << "\n";
    }
    return out.str();
}

std::string xm_log_csv(const std::vector<xm::XmStepLog>& log) {
    std::ostringstream out;
    out << "step,branch,loss\n";
    for (const auto& e : log) {
        out << e.step << "," << xm::to_string(e.branch) << "," << format_double(e.loss) << "\n";
    }
    return out.str();
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) {
        return kNaN;
    }
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<std::string> find_motions(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw ContractError("not a directory: " + dir);
    }
    std::vector<std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".tmot") {
            out.push_back(entry.path().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

motion::Corpus load_corpus_dir(const std::string& dir) {
    const std::string manifest = join_path(dir, kManifest);
    if (!fs::exists(manifest)) {
        throw ContractError("no " + std::string(kManifest) + " in " + dir);
    }
    return motion::read_corpus(manifest);
}

std::string format_meta(const GenerationMeta& m) {
    std::ostringstream out;
    out << "audio=" << m.audio << "\n";
    out << "beats=";
    for (std::size_t i = 0; i < m.music_beats.size(); ++i) {
        out << (i ? " " : "") << format_double(m.music_beats[i]);
    }
    out << "\n";
    out << "text=" << m.text << "\n";
    out << "text_start=" << format_double(m.text_start) << "\n";
    out << "text_duration=" << format_double(m.text_duration) << "\n";
    out << "top_k=" << m.top_k << "\n";
    out << "seed=" << m.seed << "\n";
    return out.str();
}

GenerationMeta parse_meta(const std::string& text) {
    GenerationMeta m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            continue;
        }
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "audio") {
            m.audio = value;
        } else if (key == "beats") {
            for (const auto& tok : split_ws(value)) {
                m.music_beats.push_back(parse_double(tok));
            }
        } else if (key == "text") {
            m.text = value;
        } else if (key == "text_start") {
            m.text_start = parse_double(value);
        } else if (key == "text_duration") {
            m.text_duration = parse_double(value);
        } else if (key == "top_k") {
            m.top_k = static_cast<std::size_t>(parse_int(value));
        } else if (key == "seed") {
            m.seed = static_cast<std::uint64_t>(parse_int(value));
        }
    }
    return m;
}

std::string MetricReport::format() const {
    std::ostringstream out;
    for (const auto& [k, v] : metrics) {
        out << k << "=" << format_double(v) << "\n";
    }
    for (const auto& [k, v] : params) {
        out << "param." << k << "=" << v << "\n";
    }
    return out.str();
}

std::string MetricReport::format_csv() const {
    std::ostringstream head, row;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        head << (i ? "," : "") << metrics[i].first;
        row << (i ? "," : "") << format_double(metrics[i].second);
    }
    return head.str() + "\n" + row.str() + "\n";
}

double MetricReport::get(const std::string& key) const {
    for (const auto& [k, v] : metrics) {
        if (k == key) {
            return v;
        }
    }
    throw ContractError("metric report has no key '" + key + "'");
}

void gen_data(const GenDataOptions& opt, const RunConfig& cfg) {
    require(!opt.out.empty(), "gen-data: --out is required");
    require(opt.n > 0, "gen-data: --n must be >= 1");
    motion::Corpus corpus;
    if (opt.kind == "dance") {
        corpus = motion::synth_dance_corpus(opt.n, opt.seed);
    } else if (opt.kind == "action") {
        corpus = motion::synth_action_corpus(opt.n, opt.seed);
    } else {
        throw ConfigError("gen-data: --kind must be dance or action, got '" + opt.kind + "'");
    }
    motion::write_corpus(opt.out, corpus, kManifest);
    RunConfig resolved = cfg;
    resolved.set("seed", std::to_string(opt.seed));
    write_file(join_path(opt.out, "config.txt"), resolved.format());
    std::cout << "gen-data: " << corpus.items.size() << " " << opt.kind << " items -> " << opt.out << "\n";
}

void train_vqvae_cmd(const TrainOptions& opt, const RunConfig& cfg) {
    const std::string out = out_dir(opt.out, cfg);
    std::vector<motion::Corpus> corpora;
    for (const auto& d : corpus_dirs(opt, cfg)) {
        corpora.push_back(load_corpus_dir(d));
    }
    const auto train_cfg = cfg.vq_train();
    vq::VqTrainer trainer = opt.resume.empty()
                                ? vq::VqTrainer(vq::VqVaeModel(cfg.vq_model()), corpora, train_cfg)
                                : vq::VqTrainer::resume(load_kind(opt.resume, "vqvae"), corpora, train_cfg);
    const std::size_t every = progress_every(train_cfg.steps);
    trainer.run(train_cfg.steps, [&](const vq::VqStepLog& e) {
        if (e.step % every == 0 || e.step == train_cfg.steps) {
            std::cout << "train-vqvae: step " << e.step << "/" << train_cfg.steps << " loss "
                      << format_double(e.loss) << " recon " << format_double(e.reconstruction) << "\n";
        }
    });
    // Stored usage reflects the final model only.
    auto& model = trainer.model();
    model.codebook().usage_counts.clear();
    for (const auto& c : corpora) {
        vq::tokenize_corpus(model, c);
    }
    Checkpoint ckpt;
    trainer.save(ckpt);
    save_checkpoint(join_path(out, "vqvae.ckpt"), ckpt);
    write_file(join_path(out, "vq_log.csv"), vq_log_csv(trainer.log()));
    std::set<std::string> tags;
    for (const auto& c : corpora) {
        tags.insert(motion::to_string(c.provenance));
    }
    if (tags.size() >= 2 && !trainer.epochs().empty()) {
        const auto a = motion::to_string(corpora[0].provenance);
        const auto b = *std::find_if(tags.begin(), tags.end(), [&](const std::string& t) { return t != a; });
        write_file(join_path(out, "usage_epochs.csv"),
                   analysis::format_epoch_csv(analysis::usage_over_epochs(trainer.epochs(), a, b)));
    }
    write_file(join_path(out, "config.txt"), cfg.format());
    std::cout << "train-vqvae: " << model.codebook().used_entries().size() << " codebook entries in use -> " << out
              << "\n";
}

void train_xmodal_cmd(const TrainOptions& opt, const RunConfig& cfg) {
    const std::string out = out_dir(opt.out, cfg);
    require(!opt.vq_ckpt.empty(), "train-xmodal: --vq is required");
    vq::VqVaeModel vq = vq::VqVaeModel::load(load_kind(opt.vq_ckpt, "vqvae"));
    std::vector<xm::MusicPair> music;
    std::vector<xm::TextPair> text;
    std::size_t audio_dims = 0;
    for (const auto& d : corpus_dirs(opt, cfg)) {
        const auto corpus = load_corpus_dir(d);
        vq::VqVaeModel scratch = vq;
        const auto tokens = vq::tokenize_corpus(scratch, corpus);
        for (std::size_t i = 0; i < corpus.items.size(); ++i) {
            const auto& item = corpus.items[i];
            if (item.audio) {
                const std::size_t n = std::min(item.audio->frames, tokens[i].size());
                if (audio_dims != 0 && item.audio->dims != audio_dims) {
                    throw FormatError("train-xmodal: audio feature widths differ across items");
                }
                audio_dims = item.audio->dims;
                music.push_back({num::slice_rows(xm::audio_tensor(*item.audio), 0, n),
                                 std::vector<int>(tokens[i].begin(), tokens[i].begin() + static_cast<long>(n))});
            }
            if (item.text) {
                text.push_back({motion::tokenize_text(*item.text, motion::Vocabulary::builtin()), tokens[i]});
            }
        }
    }
    const auto train_cfg = cfg.xm_train();
    auto model_cfg = cfg.xm_model(vq.codebook().size());
    if (audio_dims != 0) {
        model_cfg.audio_dims = audio_dims;
    }
    xm::XmTrainer trainer = opt.resume.empty()
                                ? xm::XmTrainer(xm::XmodalModel(model_cfg), music, text, train_cfg)
                                : xm::XmTrainer::resume(load_kind(opt.resume, "xmodal"), music, text, train_cfg);
    const std::size_t every = progress_every(train_cfg.steps);
    trainer.run(train_cfg.steps, [&](const xm::XmStepLog& e) {
        if (e.step % every == 0 || e.step == train_cfg.steps) {
            std::cout << "train-xmodal: step " << e.step << "/" << train_cfg.steps << " " << xm::to_string(e.branch)
                      << " loss " << format_double(e.loss) << "\n";
        }
    });
    Checkpoint ckpt;
    trainer.save(ckpt);
    ckpt.set("xm.vq_d", vq.config().latent_dim);
    save_checkpoint(join_path(out, "xmodal.ckpt"), ckpt);
    write_file(join_path(out, "xm_log.csv"), xm_log_csv(trainer.log()));
    write_file(join_path(out, "config.txt"), cfg.format());
    std::cout << "train-xmodal: " << music.size() << " music pairs, " << text.size() << " text pairs -> " << out
              << "\n";
}

void generate_cmd(const GenerateOptions& opt, const RunConfig& cfg) {
    require(!opt.vq_ckpt.empty() && !opt.xm_ckpt.empty(), "generate: --ckpt-vq and --ckpt-xm are required");
    require(!opt.audio.empty(), "generate: --audio is required");
    require(!opt.out.empty(), "generate: --out is required");
    const vq::VqVaeModel vq = vq::VqVaeModel::load(load_kind(opt.vq_ckpt, "vqvae"));
    const Checkpoint xm_ckpt = load_kind(opt.xm_ckpt, "xmodal");
    const xm::XmodalModel model = xm::XmodalModel::load(xm_ckpt);
    if (model.config().codebook_size != vq.codebook().size() ||
        (xm_ckpt.has("xm.vq_d") && static_cast<std::size_t>(xm_ckpt.get_int("xm.vq_d")) != vq.config().latent_dim)) {
        throw FormatError("generate: incompatible checkpoints (VQ-VAE K=" + std::to_string(vq.codebook().size()) +
                          " d=" + std::to_string(vq.config().latent_dim) + ", transformer K=" +
                          std::to_string(model.config().codebook_size) + ")");
    }
    const std::size_t context = xm_ckpt.has("xm.context") ? static_cast<std::size_t>(xm_ckpt.get_int("xm.context"))
                                                          : model.config().max_positions;

    fusion::GenerationRequest req;
    req.audio = motion::read_audio(opt.audio);
    req.top_k = opt.top_k ? *opt.top_k : cfg.get_size("gen.top_k");
    req.seed = opt.seed;
    req.locus = fusion::fusion_locus_from_string(cfg.get("gen.fusion_locus"));
    if (opt.text) {
        req.text = fusion::TextInstruction{motion::tokenize_text(*opt.text, motion::Vocabulary::builtin()),
                                           cfg.fusion_schedule(opt.text_start, opt.text_duration)};
    }
    const auto result = fusion::generate(vq, model, context, req);

    const std::string base = strip_extension(opt.out, ".tmot");
    motion::write_motion(base + ".tmot", result.motion);
    write_file(base + ".ttok", vq::format_tokens(result.tokens, vq.codebook().size()));
    GenerationMeta meta;
    meta.audio = opt.audio;
    meta.music_beats = req.audio.beat_times;
    meta.text = opt.text.value_or("");
    meta.text_start = opt.text ? opt.text_start : 0.0;
    meta.text_duration = opt.text ? opt.text_duration : 0.0;
    meta.top_k = req.top_k;
    meta.seed = req.seed;
    write_file(base + ".meta", format_meta(meta));
    RunConfig resolved = cfg;
    resolved.set("seed", std::to_string(opt.seed));
    resolved.set("gen.top_k", std::to_string(req.top_k));
    write_file(base + ".config.txt", resolved.format());
    std::cout << "generate: " << result.tokens.size() << " tokens, " << result.motion.frames << " frames -> " << base
              << ".tmot\n";
}

MetricReport evaluate_cmd(const EvaluateOptions& opt, const RunConfig& cfg) {
    require(!opt.generated.empty() && !opt.reference.empty(), "evaluate: --generated and --reference are required");
    require(!opt.out.empty(), "evaluate: --out is required");
    const auto gen_paths = find_motions(opt.generated);
    const auto ref_paths = find_motions(opt.reference);
    if (gen_paths.size() < 2 || ref_paths.size() < 2) {
        throw ContractError("evaluate: need >= 2 motions on each side (generated " + std::to_string(gen_paths.size()) +
                            ", reference " + std::to_string(ref_paths.size()) + ")");
    }
    std::vector<motion::MotionSequence> gen, ref;
    for (const auto& p : gen_paths) {
        gen.push_back(motion::read_motion(p));
    }
    for (const auto& p : ref_paths) {
        ref.push_back(motion::read_motion(p));
    }

    // Music beats: generation sidecars, or the audio of a corpus directory.
    std::map<std::string, std::vector<double>> beats;
    for (const auto& p : gen_paths) {
        const std::string meta = strip_extension(p, ".tmot") + ".meta";
        if (fs::exists(meta)) {
            beats[p] = parse_meta(read_file(meta)).music_beats;
        }
    }
    if (fs::exists(join_path(opt.generated, kManifest))) {
        const auto corpus = load_corpus_dir(opt.generated);
        for (std::size_t i = 0; i < corpus.items.size(); ++i) {
            const auto& item = corpus.items[i];
            if (!item.audio) {
                continue;
            }
            // Match the corpus item to its file by content.
            for (std::size_t g = 0; g < gen.size(); ++g) {
                if (gen[g].data == item.motion.data && !beats.count(gen_paths[g])) {
                    beats[gen_paths[g]] = item.audio->beat_times;
                    break;
                }
            }
        }
    }

    const double freeze_speed = cfg.get_double("metric.freeze_speed");
    const double freeze_duration = cfg.get_double("metric.freeze_duration");
    const double auc_max = cfg.get_double("metric.auc_max");
    const double sigma = cfg.get_double("metric.beat_sigma");
    const std::size_t div_pairs = cfg.get_size("metric.div_pairs");
    const std::size_t mpd_k = cfg.get_size("metric.mpd_k");
    const std::size_t past = cfg.get_size("metric.mpd_past");
    const std::size_t future = cfg.get_size("metric.mpd_future");
    const std::size_t stride = cfg.get_size("metric.mpd_stride");
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));

    std::vector<metrics::FeatureVector> gk, gg, rk, rg;
    std::vector<double> pffs, aucs, aligns, mpds;
    for (const auto& m : gen) {
        gk.push_back(metrics::kinetic_features(m));
        gg.push_back(metrics::geometric_features(m));
        pffs.push_back(metrics::pff(m, freeze_speed, freeze_duration));
        aucs.push_back(metrics::auc_f(m, auc_max, freeze_duration));
    }
    for (const auto& m : ref) {
        rk.push_back(metrics::kinetic_features(m));
        rg.push_back(metrics::geometric_features(m));
    }
    for (std::size_t g = 0; g < gen.size(); ++g) {
        const auto it = beats.find(gen_paths[g]);
        if (it != beats.end() && !it->second.empty()) {
            aligns.push_back(metrics::beat_align(it->second, metrics::dance_beats(gen[g]), sigma));
        }
    }
    std::vector<motion::MotionSequence> mpd_ref = ref;
    if (!opt.mpd_reference.empty()) {
        mpd_ref.clear();
        for (const auto& p : find_motions(opt.mpd_reference)) {
            mpd_ref.push_back(motion::read_motion(p));
        }
    }
    const auto oracle = metrics::knn_predictor(mpd_ref, mpd_k, past, future, stride);
    for (const auto& m : gen) {
        if (m.frames >= past + future) {
            mpds.push_back(metrics::mpd(oracle, m, 0, past, past + future));
        }
    }

    MetricReport report;
    report.metrics = {
        {"FID_k", metrics::fid(gk, rk)},
        {"FID_g", metrics::fid(gg, rg)},
        {"Div_k", metrics::diversity(gk, div_pairs, seed)},
        {"Div_g", metrics::diversity(gg, div_pairs, seed)},
        {"BeatAlign", mean_of(aligns)},
        {"PFF", mean_of(pffs)},
        {"AUC_f", mean_of(aucs)},
        {"MPD", mean_of(mpds)},
    };
    report.params = {
        {"n_generated", std::to_string(gen.size())},
        {"n_reference", std::to_string(ref.size())},
        {"n_beat_align", std::to_string(aligns.size())},
        {"n_mpd", std::to_string(mpds.size())},
        {"freeze_speed", format_double(freeze_speed)},
        {"freeze_duration", format_double(freeze_duration)},
        {"auc_max", format_double(auc_max)},
        {"beat_sigma", format_double(sigma)},
        {"div_pairs", std::to_string(div_pairs)},
        {"mpd_k", std::to_string(mpd_k)},
        {"mpd_past", std::to_string(past)},
        {"mpd_future", std::to_string(future)},
    };
    write_file(opt.out, report.format());
    if (!opt.csv.empty()) {
        write_file(opt.csv, report.format_csv());
    }
    write_file(opt.out + ".config.txt", cfg.format());
    std::cout << report.format();
    return report;
}

void codebook_stats_cmd(const CodebookStatsOptions& opt, const RunConfig& cfg) {
    require(!opt.ckpt.empty() && !opt.corpus_a.empty() && !opt.corpus_b.empty() && !opt.out.empty(),
            "codebook-stats: --ckpt, --corpus-a, --corpus-b and --out are required");
    vq::VqVaeModel model = vq::VqVaeModel::load(load_kind(opt.ckpt, "vqvae"));
    model.codebook().usage_counts.clear();
    const std::size_t K = model.codebook().size();
    const auto ta = vq::tokenize_corpus(model, load_corpus_dir(opt.corpus_a));
    const auto tb = vq::tokenize_corpus(model, load_corpus_dir(opt.corpus_b));
    const auto stats = analysis::usage_stats(ta, tb, K);
    write_file(opt.out, analysis::format_usage_csv(stats));
    if (!opt.pca_out.empty()) {
        std::vector<int> ids;
        std::vector<std::vector<double>> rows;
        const auto e = model.codebook().entries.data();
        const std::size_t d = model.codebook().entries.cols();
        for (std::size_t k = 0; k < K; ++k) {
            if (stats.histogram_a[k] > 0.0 || stats.histogram_b[k] > 0.0) {
                ids.push_back(static_cast<int>(k));
                rows.emplace_back(e.begin() + static_cast<long>(k * d), e.begin() + static_cast<long>((k + 1) * d));
            }
        }
        std::ostringstream pca;
        pca << "token_id,pc1,pc2,freq_a,freq_b\n";
        if (rows.size() >= 2) {
            const auto proj = analysis::pca_2d(rows);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const auto k = static_cast<std::size_t>(ids[i]);
                pca << ids[i] << "," << format_double(proj[i][0]) << "," << format_double(proj[i][1]) << ","
                    << format_double(stats.histogram_a[k]) << "," << format_double(stats.histogram_b[k]) << "\n";
            }
        }
        write_file(opt.pca_out, pca.str());
    }
    write_file(opt.out + ".config.txt", cfg.format());
    std::cout << "codebook-stats: used " << stats.used_a << "/" << stats.used_b << ", shared " << stats.shared << " ("
              << format_double(stats.pct_a) << "% / " << format_double(stats.pct_b) << "%)\n";
}

}  // namespace tm2d::cli
