#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uagg::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitData = 4;

struct AggregateArgs {
    std::string manifest;
    std::string strategies;
    std::string out;
    std::string padding = "replicate";
    int jobs = 1;
};

struct GmmFitArgs {
    std::string features;
    std::string variant = "all";
    std::string strategies;
    std::string manifest;  // optional: restrict fitting rows to ood_label == 0
    std::string drop;
    std::string keep_only;
    int kmax = 10;
    std::uint64_t seed = 0;
    double epsilon = 1e-3;
    int restarts = 5;
    int max_iter = 500;
    double tol = 1e-6;
    double ridge = 1e-6;
    std::string out;
};

struct GmmScoreArgs {
    std::string model;
    std::string features;
    std::string column = "gmm";
    std::string out;
};

struct EvalArgs {
    std::string scores;
    std::string manifest;
    std::string task = "ood";
    std::string strategies;
    std::string dataset;
    int bootstrap = 500;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_prefix;
};

struct RankArgs {
    std::vector<std::string> inputs;
    std::string metric = "auroc";
    double alpha = 0.05;
    std::string out_prefix;
};

struct SynthArgs {
    std::string spec;
    std::string iid_pattern = "noise";
    std::string ood_pattern = "blob";
    std::size_t n_iid = 50;
    std::size_t n_ood = 50;
    std::size_t size = 64;
    std::string ladder;
    bool match_mean = false;
    bool no_masks = false;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int run_aggregate(const AggregateArgs& args);
int run_gmm_fit(const GmmFitArgs& args);
int run_gmm_score(const GmmScoreArgs& args);
int run_eval(const EvalArgs& args);
int run_rank(const RankArgs& args);
int run_synth(const SynthArgs& args);

}  // namespace uagg::cli
