#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tm2d/cli/run_config.hpp"
#include "tm2d/motion/synth.hpp"

namespace tm2d::cli {

struct GenDataOptions {
    std::string kind = "dance";
    std::size_t n = 10;
    std::uint64_t seed = 1;
    std::string out;
};

struct TrainOptions {
    std::vector<std::string> data;  // corpus directories (each holding manifest.txt)
    std::string out;
    std::string vq_ckpt;            // train-xmodal only
    std::string resume;
};

struct GenerateOptions {
    std::string vq_ckpt;
    std::string xm_ckpt;
    std::string audio;
    std::optional<std::string> text;
    double text_start = 0.0;
    double text_duration = 0.0;
    std::optional<std::size_t> top_k;
    std::uint64_t seed = 1;
    std::string out;  // motion path; tokens and sidecar are written next to it
};

struct EvaluateOptions {
    std::string generated;
    std::string reference;
    std::string mpd_reference;
    std::string out;
    std::string csv;
};

struct CodebookStatsOptions {
    std::string ckpt;
    std::string corpus_a;
    std::string corpus_b;
    std::string out;
    std::string pca_out;
};

// Named metric values in a fixed order, plus the parameters they used.
struct MetricReport {
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::pair<std::string, std::string>> params;

    std::string format() const;
    std::string format_csv() const;
    double get(const std::string& key) const;
};

// Every command writes its resolved config as "<out>/config.txt" (or
// "<out>.config.txt" for file outputs).
void gen_data(const GenDataOptions& opt, const RunConfig& cfg);
void train_vqvae_cmd(const TrainOptions& opt, const RunConfig& cfg);
void train_xmodal_cmd(const TrainOptions& opt, const RunConfig& cfg);
void generate_cmd(const GenerateOptions& opt, const RunConfig& cfg);
MetricReport evaluate_cmd(const EvaluateOptions& opt, const RunConfig& cfg);
void codebook_stats_cmd(const CodebookStatsOptions& opt, const RunConfig& cfg);

// Motion files (*.tmot) under `dir`, recursively, sorted by path.
std::vector<std::string> find_motions(const std::string& dir);
// A corpus directory holds manifest.txt.
motion::Corpus load_corpus_dir(const std::string& dir);

// Sidecar written by generate: key=value lines.
struct GenerationMeta {
    std::string audio;
    std::vector<double> music_beats;
    std::string text;
    double text_start = 0.0;
    double text_duration = 0.0;
    std::size_t top_k = 0;
    std::uint64_t seed = 0;
};
std::string format_meta(const GenerationMeta& m);
GenerationMeta parse_meta(const std::string& text);

}  // namespace tm2d::cli
