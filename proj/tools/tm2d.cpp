#include <CLI11.hpp>
#include <iostream>

#include "tm2d/cli/commands.hpp"
#include "tm2d/common/errors.hpp"

using namespace tm2d;

namespace {

// --config/--set/--seed, shared by every subcommand.
struct ConfigFlags {
    std::string file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", file, "key=value config file");
        cmd->add_option("--set", overrides, "override one config key (key=value), repeatable");
        cmd->add_option("--seed", seed, "random seed");
    }

    cli::RunConfig resolve() const {
        auto cfg = cli::RunConfig::defaults();
        if (!file.empty()) {
            cfg.merge_file(file);
        }
        for (const auto& o : overrides) {
            cfg.apply_override(o);
        }
        if (seed) {
            cfg.set("seed", std::to_string(*seed));
        }
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TM2D: music-text to dance pipeline on synthetic corpora"};
    app.require_subcommand(1);

    cli::GenDataOptions gen_opt;
    ConfigFlags gen_cfg;
    auto* gen = app.add_subcommand("gen-data", "synthesize a dance or action corpus");
    gen->add_option("--kind", gen_opt.kind, "dance or action")->check(CLI::IsMember({"dance", "action"}));
    gen->add_option("--n", gen_opt.n, "number of items")->required();
    gen->add_option("--out", gen_opt.out, "output directory")->required();
    gen_cfg.attach(gen);

    cli::TrainOptions vq_opt;
    ConfigFlags vq_cfg;
    auto* tvq = app.add_subcommand("train-vqvae", "train the motion VQ-VAE");
    tvq->add_option("--data", vq_opt.data, "corpus directory, repeatable");
    tvq->add_option("--out", vq_opt.out, "output directory");
    tvq->add_option("--resume", vq_opt.resume, "checkpoint to continue from");
    vq_cfg.attach(tvq);

    cli::TrainOptions xm_opt;
    ConfigFlags xm_cfg;
    auto* txm = app.add_subcommand("train-xmodal", "train the cross-modal transformer");
    txm->add_option("--vq", xm_opt.vq_ckpt, "VQ-VAE checkpoint")->required();
    txm->add_option("--data", xm_opt.data, "corpus directory, repeatable");
    txm->add_option("--out", xm_opt.out, "output directory");
    txm->add_option("--resume", xm_opt.resume, "checkpoint to continue from");
    xm_cfg.attach(txm);

    cli::GenerateOptions g_opt;
    ConfigFlags g_cfg;
    std::string text;
    std::size_t top_k = 0;
    auto* genm = app.add_subcommand("generate", "generate dance from music, optionally steered by text");
    genm->add_option("--ckpt-vq", g_opt.vq_ckpt, "VQ-VAE checkpoint")->required();
    genm->add_option("--ckpt-xm", g_opt.xm_ckpt, "transformer checkpoint")->required();
    genm->add_option("--audio", g_opt.audio, "TAUD audio feature file")->required();
    auto* text_opt = genm->add_option("--text", text, "text instruction");
    genm->add_option("--text-start", g_opt.text_start, "seconds")->needs(text_opt);
    genm->add_option("--text-duration", g_opt.text_duration, "seconds")->needs(text_opt);
    auto* topk_opt = genm->add_option("--top-k", top_k, "sample from the k most likely tokens");
    genm->add_option("--out", g_opt.out, "output motion path (.tmot)")->required();
    g_cfg.attach(genm);

    cli::EvaluateOptions e_opt;
    ConfigFlags e_cfg;
    auto* ev = app.add_subcommand("evaluate", "compute the metric report");
    ev->add_option("--generated", e_opt.generated, "directory of generated motions")->required();
    ev->add_option("--reference", e_opt.reference, "directory of reference motions")->required();
    ev->add_option("--mpd-ref", e_opt.mpd_reference, "reference motions for the MPD predictor");
    ev->add_option("--out", e_opt.out, "report path")->required();
    ev->add_option("--csv", e_opt.csv, "optional CSV row");
    e_cfg.attach(ev);

    cli::CodebookStatsOptions c_opt;
    ConfigFlags c_cfg;
    auto* cs = app.add_subcommand("codebook-stats", "shared codebook usage of two corpora");
    cs->add_option("--ckpt", c_opt.ckpt, "VQ-VAE checkpoint")->required();
    cs->add_option("--corpus-a", c_opt.corpus_a, "first corpus directory")->required();
    cs->add_option("--corpus-b", c_opt.corpus_b, "second corpus directory")->required();
    cs->add_option("--out", c_opt.out, "usage CSV path")->required();
    cs->add_option("--pca-out", c_opt.pca_out, "optional 2-D projection of used entries");
    c_cfg.attach(cs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            const auto cfg = gen_cfg.resolve();
            gen_opt.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
            cli::gen_data(gen_opt, cfg);
        } else if (*tvq) {
            cli::train_vqvae_cmd(vq_opt, vq_cfg.resolve());
        } else if (*txm) {
            cli::train_xmodal_cmd(xm_opt, xm_cfg.resolve());
        } else if (*genm) {
            const auto cfg = g_cfg.resolve();
            if (*text_opt) {
                g_opt.text = text;
            }
            if (*topk_opt) {
                g_opt.top_k = top_k;
            }
            g_opt.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
            cli::generate_cmd(g_opt, cfg);
        } else if (*ev) {
            cli::evaluate_cmd(e_opt, e_cfg.resolve());
        } else if (*cs) {
            cli::codebook_stats_cmd(c_opt, c_cfg.resolve());
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
