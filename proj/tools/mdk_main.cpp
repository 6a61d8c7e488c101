// mdk: modal-decomposition data generation plus a masked-autoencoder
// regressor, wired end to end: decompose, dataset, train, predict, eval,
// bench, fixtures.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdk/dataset.hpp"
#include "mdk/errors.hpp"
#include "mdk/fixtures.hpp"
#include "mdk/hodmd.hpp"
#include "mdk/io.hpp"
#include "mdk/model.hpp"
#include "mdk/modal_svd.hpp"
#include "mdk/predict.hpp"

namespace fs = std::filesystem;
using namespace mdk;

namespace {

struct CliOptions {
    std::string manifest;
    std::string config;
    std::string out;
    std::uint64_t seed = 42;
    bool seed_given = false;
    int case_id = 0;
    std::string kind;
    std::string checkpoint;
    bool dry_run = false;
    std::size_t threads = 1;
    std::string preset;
};

struct AppConfig {
    ModelConfig model;
    bool model_given = false;
    ScheduleConfig schedule;
    bool schedule_given = false;
    std::size_t batch_size = 16;
    std::uint64_t seed = 42;
    bool augment = true;
    GenerationConfig gen;
    SplitFractions split;
};

void check_keys(const nlohmann::json& j, const std::string& where,
                const std::vector<std::string>& known) {
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown key \"" + key + "\" in " + where);
}

AppConfig load_app_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }

    AppConfig out;
    try {
        check_keys(j, "config", {"model", "schedule", "train", "generation", "split"});
        if (j.contains("model")) {
            const auto& m = j["model"];
            check_keys(m, "model",
                       {"reference_scale", "img_h", "img_w", "patch", "enc_blocks", "enc_heads",
                        "enc_dim", "mlp_ratio", "dec_dim", "dec_blocks", "dec_heads", "mask_ratio",
                        "alpha"});
            if (m.value("reference_scale", false)) out.model = ModelConfig::reference();
            if (m.contains("img_h")) out.model.img_h = m["img_h"].get<std::size_t>();
            if (m.contains("img_w")) out.model.img_w = m["img_w"].get<std::size_t>();
            if (m.contains("patch")) out.model.patch = m["patch"].get<std::size_t>();
            if (m.contains("enc_blocks")) out.model.enc_blocks = m["enc_blocks"].get<std::size_t>();
            if (m.contains("enc_heads")) out.model.enc_heads = m["enc_heads"].get<std::size_t>();
            if (m.contains("enc_dim")) out.model.enc_dim = m["enc_dim"].get<std::size_t>();
            if (m.contains("mlp_ratio")) out.model.mlp_ratio = m["mlp_ratio"].get<double>();
            if (m.contains("dec_dim")) out.model.dec_dim = m["dec_dim"].get<std::size_t>();
            if (m.contains("dec_blocks")) out.model.dec_blocks = m["dec_blocks"].get<std::size_t>();
            if (m.contains("dec_heads")) out.model.dec_heads = m["dec_heads"].get<std::size_t>();
            if (m.contains("mask_ratio")) out.model.mask_ratio = m["mask_ratio"].get<double>();
            if (m.contains("alpha")) out.model.alpha = m["alpha"].get<double>();
            out.model.validate();
            out.model_given = true;
        }
        if (j.contains("schedule")) {
            const auto& s = j["schedule"];
            check_keys(s, "schedule", {"lambda_t", "warmup_steps", "total_steps"});
            if (s.contains("lambda_t")) out.schedule.lambda_t = s["lambda_t"].get<double>();
            if (s.contains("warmup_steps"))
                out.schedule.warmup_steps = s["warmup_steps"].get<std::size_t>();
            if (s.contains("total_steps"))
                out.schedule.total_steps = s["total_steps"].get<std::size_t>();
            out.schedule_given = true;
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            check_keys(t, "train", {"batch_size", "seed", "augment"});
            if (t.contains("batch_size")) out.batch_size = t["batch_size"].get<std::size_t>();
            if (t.contains("seed")) out.seed = t["seed"].get<std::uint64_t>();
            if (t.contains("augment")) out.augment = t["augment"].get<bool>();
        }
        if (j.contains("generation")) {
            const auto& g = j["generation"];
            check_keys(g, "generation",
                       {"dt_seconds", "svd_rank", "svd_tolerance", "eps_svd", "eps_dmd",
                        "min_snapshots", "max_outer_iters", "delay", "f_lo_hz", "f_hi_hz"});
            if (g.contains("svd_rank") && g.contains("svd_tolerance"))
                throw ConfigError("svd_rank and svd_tolerance are mutually exclusive");
            if (g.contains("svd_rank"))
                out.gen.svd_rule = TruncationRule::by_rank(g["svd_rank"].get<std::size_t>());
            if (g.contains("svd_tolerance"))
                out.gen.svd_rule = TruncationRule::by_tolerance(g["svd_tolerance"].get<double>());
            if (g.contains("dt_seconds"))
                out.gen.hodmd.dt_seconds = g["dt_seconds"].get<double>();
            if (g.contains("eps_svd")) out.gen.hodmd.eps_svd = g["eps_svd"].get<double>();
            if (g.contains("eps_dmd")) out.gen.hodmd.eps_dmd = g["eps_dmd"].get<double>();
            if (g.contains("min_snapshots"))
                out.gen.hodmd.min_snapshots = g["min_snapshots"].get<std::size_t>();
            if (g.contains("max_outer_iters"))
                out.gen.hodmd.max_outer_iters = g["max_outer_iters"].get<std::size_t>();
            if (g.contains("delay")) out.gen.hodmd.d = g["delay"].get<std::size_t>();
            if (g.contains("f_lo_hz")) out.gen.hodmd.f_lo_hz = g["f_lo_hz"].get<double>();
            if (g.contains("f_hi_hz")) out.gen.hodmd.f_hi_hz = g["f_hi_hz"].get<double>();
        }
        if (j.contains("split")) {
            const auto& s = j["split"];
            check_keys(s, "split", {"train", "val", "test"});
            if (s.contains("train")) out.split.train = s["train"].get<double>();
            if (s.contains("val")) out.split.val = s["val"].get<double>();
            if (s.contains("test")) out.split.test = s["test"].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad value in config file " + path + ": " + e.what());
    }
    return out;
}

AppConfig resolve_config(const CliOptions& o) {
    AppConfig cfg = o.config.empty() ? AppConfig{} : load_app_config(o.config);
    if (o.seed_given) cfg.seed = o.seed;
    cfg.gen.seed = cfg.seed;

    std::size_t threads = o.threads;
    if (const char* env = std::getenv("MDK_THREADS")) {
        char* end = nullptr;
        const unsigned long cap = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0' || cap == 0)
            throw ConfigError(std::string("MDK_THREADS must be a positive integer, got \"") +
                              env + "\"");
        threads = std::min<std::size_t>(threads, cap);
    }
    cfg.gen.threads = std::max<std::size_t>(threads, 1);
    return cfg;
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + " path is required");
    if (!fs::exists(path)) throw ManifestError("missing " + what + ": " + path);
}

std::string manifest_dir(const std::string& manifest_path) {
    const fs::path p(manifest_path);
    return p.has_parent_path() ? p.parent_path().string() : std::string(".");
}

struct Corpus {
    std::vector<ManifestEntry> entries;
    std::vector<VideoSequence> sequences;
};

Corpus load_corpus(const std::string& manifest_path, const GenerationConfig& gen) {
    Corpus c;
    c.entries = read_manifest(manifest_path);
    const std::string dir = manifest_dir(manifest_path);
    for (const ManifestEntry& e : c.entries) {
        VideoSequence seq = load_sequence(dir, e, gen.hodmd.dt_seconds);
        if (seq.annotation.has_roi) seq = homogenize_sequence(seq);
        c.sequences.push_back(std::move(seq));
    }
    return c;
}

void describe_config_mismatch(const ModelConfig& a, const ModelConfig& b) {
    const auto diff = [](const char* name, auto x, auto y) {
        if (x != y)
            throw ConfigError(std::string("checkpoint disagrees with --config: ") + name + " " +
                              std::to_string(x) + " vs " + std::to_string(y));
    };
    diff("img_h", a.img_h, b.img_h);
    diff("img_w", a.img_w, b.img_w);
    diff("patch", a.patch, b.patch);
    diff("enc_blocks", a.enc_blocks, b.enc_blocks);
    diff("enc_heads", a.enc_heads, b.enc_heads);
    diff("enc_dim", a.enc_dim, b.enc_dim);
    diff("mlp_ratio", a.mlp_ratio, b.mlp_ratio);
    diff("dec_dim", a.dec_dim, b.dec_dim);
    diff("dec_blocks", a.dec_blocks, b.dec_blocks);
    diff("dec_heads", a.dec_heads, b.dec_heads);
    diff("mask_ratio", a.mask_ratio, b.mask_ratio);
    diff("alpha", a.alpha, b.alpha);
}

// --- subcommands ---

int cmd_decompose(const CliOptions& o) {
    require_file(o.manifest, "manifest");
    const AppConfig cfg = resolve_config(o);
    fs::create_directories(o.out);
    const Corpus corpus = load_corpus(o.manifest, cfg.gen);

    std::ofstream report(join_path(o.out, "report.csv"), std::ios::binary | std::ios::trunc);
    report << "sequence_id,snapshots,svd_modes,dmd_modes,outer_iterations,converged\n";

    for (const VideoSequence& seq : corpus.sequences) {
        const std::string& id = seq.annotation.sequence_id;
        if (seq.frame_count() < cfg.gen.hodmd.min_snapshots) {
            std::cerr << "warning: sequence " << id << " too short ("
                      << seq.frame_count() << " < " << cfg.gen.hodmd.min_snapshots
                      << " snapshots), skipped\n";
            continue;
        }
        const SvdStageOutput svd1 = svd_stage(seq, cfg.gen.svd_rule);
        VideoSequence denoised = seq;
        denoised.frames = svd1.reconstructions;
        const HodmdResult dmd = hodmd_iterative(denoised, cfg.gen.hodmd);

        write_tensor_file(join_path(o.out, id + "_svd1.mdt"), svd1.reconstructions, true);
        write_tensor_file(join_path(o.out, id + "_hodmd.mdt"), dmd.reconstruction, true);
        write_spectrum_file(join_path(o.out, id + ".mdsp"), dmd.spectrum);

        report << id << ',' << seq.frame_count() << ',' << svd1.modes.size() << ','
               << dmd.spectrum.modes.size() << ',' << dmd.outer_iterations << ','
               << (dmd.converged ? "yes" : "no") << '\n';
        std::cout << id << ": snapshots=" << seq.frame_count()
                  << " svd_modes=" << svd1.modes.size()
                  << " dmd_modes=" << dmd.spectrum.modes.size()
                  << " outer=" << dmd.outer_iterations
                  << " converged=" << (dmd.converged ? "yes" : "no") << '\n';
    }
    return 0;
}

void print_case_counts(const TrainingCase& tcase,
                       const std::map<DataKind, std::size_t>& per_kind, std::size_t total) {
    std::string kinds;
    for (DataKind k : tcase.kinds) {
        if (!kinds.empty()) kinds += "+";
        kinds += to_string(k);
    }
    std::cout << "case " << tcase.id << " (" << kinds << ")\n";
    for (const auto& [kind, n] : per_kind)
        std::cout << "  " << to_string(kind) << ": " << n << '\n';
    std::cout << "  total: " << total << '\n';
}

int cmd_dataset(const CliOptions& o) {
    const TrainingCase tcase = TrainingCase::by_id(o.case_id);
    const AppConfig cfg = resolve_config(o);

    if (o.dry_run) {
        CorpusCounts counts;
        if (o.manifest.empty()) {
            counts = reference_training_counts();
        } else {
            require_file(o.manifest, "corpus counts file");
            counts = read_corpus_counts(o.manifest);
        }
        std::map<DataKind, std::size_t> per_kind;
        for (DataKind k : tcase.kinds)
            per_kind[k] = count_samples(counts, TrainingCase{tcase.id, {k}});
        print_case_counts(tcase, per_kind, count_samples(counts, tcase));
        return 0;
    }

    require_file(o.manifest, "manifest");
    if (o.out.empty()) throw ConfigError("dataset needs --out for the archive directory");
    const Corpus corpus = load_corpus(o.manifest, cfg.gen);

    std::vector<std::string> warnings;
    const std::vector<SampleRecord> records =
        generate_case(corpus.sequences, tcase, cfg.gen, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';

    std::map<std::string, SplitBucket> hints;
    for (const ManifestEntry& e : corpus.entries) {
        if (e.annotation.split_hint == SplitHint::Train)
            hints[e.annotation.sequence_id] = SplitBucket::Train;
        else if (e.annotation.split_hint == SplitHint::Val)
            hints[e.annotation.sequence_id] = SplitBucket::Val;
        else if (e.annotation.split_hint == SplitHint::Test)
            hints[e.annotation.sequence_id] = SplitBucket::Test;
    }
    DatasetSplit split = split_dataset(records, cfg.split, cfg.seed, hints);
    write_dataset_archive(o.out, split);

    std::map<DataKind, std::size_t> per_kind;
    for (const SampleRecord& r : records) ++per_kind[r.kind];
    print_case_counts(tcase, per_kind, records.size());
    std::cout << "train=" << split.train.size() << " val=" << split.val.size()
              << " test=" << split.test.size() << '\n';
    std::cout << "archive: " << o.out << '\n';
    return 0;
}

int cmd_train(const CliOptions& o) {
    require_file(o.manifest, "dataset archive");
    if (o.config.empty()) throw ConfigError("train needs --config with a schedule block");
    const AppConfig cfg = resolve_config(o);
    if (!cfg.schedule_given || cfg.schedule.total_steps == 0)
        throw ConfigError("train config must set schedule.total_steps");
    if (o.out.empty()) throw ConfigError("train needs --out");
    fs::create_directories(o.out);

    const DatasetSplit split = read_dataset_archive(o.manifest);

    TrainOptions topts;
    topts.batch_size = cfg.batch_size;
    topts.seed = cfg.seed;
    topts.augment_train = cfg.augment;
    topts.checkpoint_path =
        o.checkpoint.empty() ? join_path(o.out, "checkpoint.mdck") : o.checkpoint;

    const TrainResult result = train(split, cfg.model, cfg.schedule, topts);

    const std::string history_path = join_path(o.out, "history.csv");
    std::ofstream hist(history_path, std::ios::binary | std::ios::trunc);
    hist << "step,lr,total,l_reg,l_ssat,masked_patches\n";
    for (const StepRecord& rec : result.history)
        hist << rec.step << ',' << format_double(rec.lr) << ','
             << format_double(rec.loss.total) << ',' << format_double(rec.loss.l_reg) << ','
             << format_double(rec.loss.l_ssat) << ',' << rec.loss.masked_patch_count << '\n';
    hist.close();

    if (result.diverged) {
        std::cerr << "training diverged after " << result.history.size()
                  << " recorded steps; the checkpoint keeps the last finite state\n";
        return 1;
    }
    const LossBreakdown& last = result.history.back().loss;
    std::cout << "trained " << result.history.size() << " steps, final loss "
              << format_double(last.total) << " (reg " << format_double(last.l_reg) << ", ssat "
              << format_double(last.l_ssat) << ")\n";
    std::cout << "checkpoint: " << topts.checkpoint_path << '\n';
    std::cout << "history: " << history_path << '\n';
    return 0;
}

int cmd_predict(const CliOptions& o) {
    require_file(o.checkpoint, "checkpoint");
    require_file(o.manifest, "manifest");
    if (o.kind.empty()) throw ConfigError("predict needs --kind");
    if (o.out.empty()) throw ConfigError("predict needs --out");
    const auto [kind, component] = parse_test_kind(o.kind);

    const AppConfig cfg = resolve_config(o);
    const Checkpoint ck = read_checkpoint(o.checkpoint);
    if (cfg.model_given) describe_config_mismatch(ck.config, cfg.model);

    fs::create_directories(o.out);
    const Corpus corpus = load_corpus(o.manifest, cfg.gen);

    std::vector<SequencePrediction> preds;
    for (const VideoSequence& seq : corpus.sequences) {
        try {
            preds.push_back(
                predict_sequence(ck.config, ck.params, seq, kind, component, cfg.gen));
        } catch (const SequenceTooShort& e) {
            std::cerr << "warning: " << e.what() << ", skipped\n";
        }
    }
    if (preds.empty()) throw DegenerateInput("no sequence produced a prediction");

    const std::string csv_path = join_path(o.out, "predictions.csv");
    write_predictions_csv(csv_path, preds);
    for (const SequencePrediction& p : preds)
        std::cout << p.sequence_id << ": " << format_double(p.fused_months) << " months ("
                  << p.image_count << " images)\n";
    std::cout << "predictions: " << csv_path << '\n';
    return 0;
}

int cmd_eval(const CliOptions& o) {
    require_file(o.manifest, "predictions file");
    const std::vector<SequencePrediction> preds = read_predictions_csv(o.manifest);
    const MetricsReport report = evaluate(preds);
    std::cout << metrics_to_table(report);
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        std::ofstream js(join_path(o.out, "metrics.json"), std::ios::binary | std::ios::trunc);
        js << metrics_to_json(report);
        std::ofstream txt(join_path(o.out, "metrics.txt"), std::ios::binary | std::ios::trunc);
        txt << metrics_to_table(report);
        std::cout << "metrics: " << join_path(o.out, "metrics.json") << '\n';
    }
    return 0;
}

int cmd_bench(const CliOptions& o) {
    require_file(o.manifest, "manifest");
    const AppConfig cfg = resolve_config(o);

    ModelConfig mcfg = cfg.model;
    ModelParams params;
    if (!o.checkpoint.empty()) {
        require_file(o.checkpoint, "checkpoint");
        const Checkpoint ck = read_checkpoint(o.checkpoint);
        if (cfg.model_given) describe_config_mismatch(ck.config, cfg.model);
        mcfg = ck.config;
        params = ck.params;
    } else {
        params = init_params(mcfg, cfg.seed);
    }

    const Corpus corpus = load_corpus(o.manifest, cfg.gen);
    const TimingBlock t = bench(mcfg, params, corpus.sequences, cfg.gen);

    char line[200];
    std::snprintf(line, sizeof(line),
                  "timing/image: svd %.3f ms, hosvd %.3f ms, hodmd %.3f ms, pred %.3f ms, "
                  "throughput %.1f images/s\n",
                  t.t_svd_ms, t.t_hosvd_ms, t.t_hodmd_ms, t.t_pred_ms, t.throughput_ips);
    std::cout << line;

    if (!o.out.empty()) {
        fs::create_directories(o.out);
        nlohmann::json j{{"t_svd_ms", t.t_svd_ms},
                         {"t_hosvd_ms", t.t_hosvd_ms},
                         {"t_hodmd_ms", t.t_hodmd_ms},
                         {"t_pred_ms", t.t_pred_ms},
                         {"throughput_ips", t.throughput_ips}};
        std::ofstream js(join_path(o.out, "bench.json"), std::ios::binary | std::ios::trunc);
        js << j.dump(2) << '\n';
        std::cout << "timings: " << join_path(o.out, "bench.json") << '\n';
    }
    return 0;
}

int cmd_fixtures(const CliOptions& o) {
    if (o.out.empty()) throw ConfigError("fixtures needs --out");
    fs::create_directories(o.out);
    const auto note = [](const std::string& path) { std::cout << "wrote " << path << '\n'; };

    if (o.preset == "two-tone" || o.preset == "two-tone-noisy") {
        const double sigma = o.preset == "two-tone" ? 0.0 : 0.01;
        const VideoSequence seq = make_two_tone_video(sigma, o.seed);
        const std::string leaf = seq.annotation.sequence_id + ".mdt";
        write_tensor_file(join_path(o.out, leaf), seq.frames);
        ManifestEntry e;
        e.path = leaf;
        e.annotation = seq.annotation;
        const std::string manifest = join_path(o.out, "manifest.csv");
        write_manifest(manifest, {e});
        note(join_path(o.out, leaf));
        note(manifest);
        return 0;
    }
    if (o.preset == "toy") {
        const std::string manifest = write_toy_corpus(o.out, 60, o.seed);
        note(manifest);
        return 0;
    }
    if (o.preset == "linear") {
        const std::string path = join_path(o.out, "linear_trajectory.mdt");
        write_tensor_file(path, make_linear_trajectory(250, nullptr, o.seed));
        note(path);
        return 0;
    }
    if (o.preset == "corpus-meta") {
        const std::string path = join_path(o.out, "corpus_counts.csv");
        write_corpus_counts(path, reference_training_counts());
        note(path);
        return 0;
    }
    throw ConfigError("unknown preset \"" + o.preset +
                      "\" (two-tone, two-tone-noisy, toy, linear, corpus-meta)");
}

}  // namespace

int main(int argc, char** argv) {
    CliOptions o;
    CLI::App app{"modal-decomposition data generation and a masked-autoencoder regressor "
                 "for failure-time prediction from video sequences"};
    app.require_subcommand(1);

    std::vector<CLI::Option*> seed_opts;
    const auto common = [&](CLI::App* sub, bool with_threads = true) {
        seed_opts.push_back(sub->add_option("--seed", o.seed, "RNG seed")->capture_default_str());
        sub->add_option("--config", o.config, "JSON config file");
        if (with_threads)
            sub->add_option("--threads", o.threads, "worker threads (MDK_THREADS caps this)")
                ->capture_default_str();
    };

    CLI::App* dec = app.add_subcommand(
        "decompose", "per-sequence SVD + delay-embedded decomposition, spectra and "
                     "reconstructions to --out");
    dec->add_option("--manifest", o.manifest, "sequence manifest CSV")->required();
    dec->add_option("--out", o.out, "output directory")->required();
    common(dec);

    CLI::App* ds = app.add_subcommand(
        "dataset", "generate the per-case training archive (--dry-run: count from metadata)");
    ds->add_option("--manifest", o.manifest,
                   "sequence manifest CSV (dry-run: corpus counts CSV, optional)");
    ds->add_option("--case", o.case_id, "training case id, 1..14")->required();
    ds->add_option("--out", o.out, "archive directory");
    ds->add_flag("--dry-run", o.dry_run, "count samples from metadata only");
    common(ds);

    CLI::App* tr = app.add_subcommand("train", "train the regressor on a dataset archive");
    tr->add_option("--manifest", o.manifest, "dataset archive directory")->required();
    tr->add_option("--out", o.out, "output directory")->required();
    tr->add_option("--checkpoint", o.checkpoint, "checkpoint path (default <out>/checkpoint.mdck)");
    common(tr);

    CLI::App* pr = app.add_subcommand("predict", "fused per-sequence predictions under a test kind");
    pr->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
    pr->add_option("--manifest", o.manifest, "sequence manifest CSV")->required();
    pr->add_option("--kind", o.kind,
                   "test transform: original, svd-recon, svd-modes, hodmd-recon, "
                   "hodmd-modes-abs/-real/-imag")
        ->required();
    pr->add_option("--out", o.out, "output directory")->required();
    common(pr);

    CLI::App* ev = app.add_subcommand("eval", "error-margin report from a predictions CSV");
    ev->add_option("--manifest", o.manifest, "predictions CSV")->required();
    ev->add_option("--out", o.out, "output directory (metrics.json + metrics.txt)");
    common(ev, false);

    CLI::App* be = app.add_subcommand("bench", "per-image timing of every pipeline phase");
    be->add_option("--manifest", o.manifest, "sequence manifest CSV")->required();
    be->add_option("--checkpoint", o.checkpoint, "model checkpoint (default: fresh seeded params)");
    be->add_option("--out", o.out, "output directory (bench.json)");
    common(be);

    CLI::App* fx = app.add_subcommand("fixtures", "write a synthetic corpus");
    fx->add_option("--preset", o.preset,
                   "two-tone, two-tone-noisy, toy, linear, or corpus-meta")
        ->required();
    fx->add_option("--out", o.out, "output directory")->required();
    common(fx, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    o.seed_given = std::any_of(seed_opts.begin(), seed_opts.end(),
                               [](const CLI::Option* opt) { return opt->count() > 0; });

    try {
        if (*dec) return cmd_decompose(o);
        if (*ds) return cmd_dataset(o);
        if (*tr) return cmd_train(o);
        if (*pr) return cmd_predict(o);
        if (*ev) return cmd_eval(o);
        if (*be) return cmd_bench(o);
        if (*fx) return cmd_fixtures(o);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ManifestError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
