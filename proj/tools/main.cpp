#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace uagg::cli;

    CLI::App app{"uagg: aggregate segmentation uncertainty maps into scores and evaluate them"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.get_formatter()->column_width(36);

    AggregateArgs agg;
    auto* c_agg = app.add_subcommand("aggregate", "Reduce every map of a manifest to one score per strategy");
    c_agg->add_option("--manifest", agg.manifest, "Manifest CSV (sample_id, map_path, mask_path, ood_label, risk)")
        ->required();
    c_agg->add_option("--strategies", agg.strategies,
                      "Comma-separated ids: avg, plm:<patch>, ata:<T>, aqa:<q>, bca, ica, qfr, mor, "
                      "eds[:tau] (tau default 0.2), ent[:b] (b default 4), gmm:<model.json>")
        ->required();
    c_agg->add_option("--out", agg.out, "Output score CSV")->required();
    c_agg->add_option("--padding", agg.padding, "Border padding for spatial windows: replicate or ones")
        ->check(CLI::IsMember({"replicate", "ones"}));
    c_agg->add_option("--jobs", agg.jobs, "Worker threads; output order follows the manifest")
        ->check(CLI::PositiveNumber);

    GmmFitArgs fit;
    auto* c_fit = app.add_subcommand("gmm-fit", "Fit the GMM meta-aggregator on in-distribution feature rows");
    c_fit->add_option("--features", fit.features, "Score CSV produced by aggregate")->required();
    c_fit->add_option("--variant", fit.variant, "Feature set: all, int, spa or custom")
        ->check(CLI::IsMember({"all", "int", "spa", "custom"}));
    c_fit->add_option("--strategies", fit.strategies, "Comma-separated strategies for --variant custom");
    c_fit->add_option("--manifest", fit.manifest, "Restrict fitting to rows with ood_label 0 in this manifest");
    c_fit->add_option("--drop", fit.drop, "Ablation: refit without this strategy");
    c_fit->add_option("--keep-only", fit.keep_only, "Ablation: refit on this comma-separated subset");
    c_fit->add_option("--kmax", fit.kmax, "K_max, largest component count searched by BIC");
    c_fit->add_option("--seed", fit.seed, "EM initialization seed");
    c_fit->add_option("--epsilon", fit.epsilon, "Feature rescale f -> (1 - 2 eps)(f - 0.5) + 0.5");
    c_fit->add_option("--restarts", fit.restarts, "EM restarts per K");
    c_fit->add_option("--max-iter", fit.max_iter, "EM iteration cap");
    c_fit->add_option("--tol", fit.tol, "Relative log-likelihood convergence tolerance");
    c_fit->add_option("--ridge", fit.ridge, "Covariance ridge");
    c_fit->add_option("--out", fit.out, "Output model JSON")->required();

    GmmScoreArgs score;
    auto* c_score = app.add_subcommand("gmm-score", "Append the GMM negative log-likelihood to a score CSV");
    c_score->add_option("--model", score.model, "Model JSON from gmm-fit")->required();
    c_score->add_option("--features", score.features, "Score CSV holding the model's feature columns")->required();
    c_score->add_option("--column", score.column, "Name of the appended column");
    c_score->add_option("--out", score.out, "Output score CSV")->required();

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Bootstrap AUROC (ood) or E-AURC (fd) per strategy");
    c_eval->add_option("--scores", ev.scores, "Score CSV")->required();
    c_eval->add_option("--manifest", ev.manifest, "Manifest providing ood_label or risk")->required();
    c_eval->add_option("--task", ev.task, "ood or fd; fd uses confidence = -score")
        ->check(CLI::IsMember({"ood", "fd"}));
    c_eval->add_option("--strategies", ev.strategies, "Subset of score columns (default: all)");
    c_eval->add_option("--dataset", ev.dataset, "Dataset label (default: score file stem)");
    c_eval->add_option("--bootstrap", ev.bootstrap, "B, number of bootstrap resamples")->check(CLI::PositiveNumber);
    c_eval->add_option("--seed", ev.seed, "Bootstrap seed");
    c_eval->add_option("--jobs", ev.jobs, "Worker threads")->check(CLI::PositiveNumber);
    c_eval->add_option("--out-prefix", ev.out_prefix, "Prefix for _metrics/_bootstrap/_pvalues CSVs");

    RankArgs rk;
    auto* c_rank = app.add_subcommand("rank", "Mean ranks and Wilcoxon p-matrices across dataset bootstrap tables");
    c_rank->add_option("--inputs", rk.inputs, "<dataset>_bootstrap.csv files from eval")->required();
    c_rank->add_option("--metric", rk.metric, "auroc (higher is better) or eaurc (lower is better)")
        ->check(CLI::IsMember({"auroc", "eaurc"}));
    c_rank->add_option("--alpha", rk.alpha, "Significance level");
    c_rank->add_option("--out-prefix", rk.out_prefix, "Prefix for output CSVs (default: rank)");

    SynthArgs sy;
    auto* c_synth = app.add_subcommand("synth", "Materialize a synthetic benchmark (maps, masks, manifest)");
    c_synth->add_option("--spec", sy.spec, "Benchmark spec JSON; overrides the flags below");
    c_synth->add_option("--iid-pattern", sy.iid_pattern, "constant, noise, blob, ring or checkerboard");
    c_synth->add_option("--ood-pattern", sy.ood_pattern, "constant, noise, blob, ring or checkerboard");
    c_synth->add_option("--n-iid", sy.n_iid, "In-distribution map count");
    c_synth->add_option("--n-ood", sy.n_ood, "Out-of-distribution map count");
    c_synth->add_option("--size", sy.size, "Map side length");
    c_synth->add_option("--ladder", sy.ladder, "Comma-separated perturbation strengths (ladder mode)");
    c_synth->add_flag("--match-mean", sy.match_mean, "Rescale OoD maps to the iD mean uncertainty");
    c_synth->add_flag("--no-masks", sy.no_masks, "Do not write masks");
    c_synth->add_option("--seed", sy.seed, "Generator seed");
    c_synth->add_option("--out-dir", sy.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (c_agg->parsed()) return run_aggregate(agg);
    if (c_fit->parsed()) return run_gmm_fit(fit);
    if (c_score->parsed()) return run_gmm_score(score);
    if (c_eval->parsed()) return run_eval(ev);
    if (c_rank->parsed()) return run_rank(rk);
    return run_synth(sy);
}
