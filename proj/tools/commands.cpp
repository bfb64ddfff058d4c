#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "uagg/eval.hpp"
#include "uagg/intensity.hpp"
#include "uagg/io.hpp"
#include "uagg/meta_gmm.hpp"
#include "uagg/spatial.hpp"
#include "uagg/strategy.hpp"
#include "uagg/synth.hpp"

namespace fs = std::filesystem;

namespace uagg::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_io_error(e.code()) ? kExitIo : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}

// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be written by index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

Strategy parse_or_usage(const std::string& text) {
    try {
        return parse_strategy(text);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

// Canonical spelling for parseable identifiers; other column names pass through.
std::string canonical_or_raw(const std::string& text) {
    try {
        return canonical_id(text);
    } catch (const Error&) {
        return text;
    }
}

std::string dataset_name(const std::string& path, const std::string& suffix) {
    std::string stem = fs::path(path).stem().string();
    if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
        stem.erase(stem.size() - suffix.size());
    }
    return stem;
}

struct SampleResult {
    std::vector<std::optional<double>> values;
    std::vector<std::string> warnings;
    std::optional<Error> error;
};

}  // namespace

int run_aggregate(const AggregateArgs& args) {
    return guarded([&] {
        if (args.jobs < 1) throw UsageError("--jobs must be at least 1");
        Padding padding = Padding::Replicate;
        if (args.padding == "ones") {
            padding = Padding::Ones;
        } else if (args.padding != "replicate") {
            throw UsageError("--padding must be 'replicate' or 'ones'");
        }

        // Requested columns: plain strategies or gmm:<model-path>.
        struct Column {
            std::string header;
            std::optional<Strategy> strategy;
            std::optional<GmmModel> model;
        };
        std::vector<Column> columns;
        std::set<std::string> headers;
        for (const auto& item : split_list(args.strategies)) {
            Column col;
            if (item.rfind("gmm:", 0) == 0) {
                col.header = item;
                col.model = load_model(item.substr(4));
            } else {
                col.strategy = parse_or_usage(item);
                col.header = col.strategy->id();
            }
            if (!headers.insert(col.header).second) throw UsageError("strategy " + col.header + " listed twice");
            columns.push_back(std::move(col));
        }
        if (columns.empty()) throw UsageError("--strategies is empty");

        // Everything that has to be computed per map, including GMM inputs.
        std::vector<Strategy> required;
        std::map<std::string, std::size_t> slot;
        auto need = [&](const Strategy& s) {
            if (slot.emplace(s.id(), required.size()).second) required.push_back(s);
        };
        for (const auto& col : columns) {
            if (col.strategy) need(*col.strategy);
            if (col.model) {
                for (const auto& id : col.model->feature_spec.strategies) need(parse_strategy(id));
            }
        }

        const Manifest manifest = read_manifest(args.manifest);
        for (const auto& s : required) {
            if (!s.needs_mask()) continue;
            for (const auto& row : manifest.rows) {
                if (!row.mask_path) {
                    throw Error(ErrorCode::MaskRequired,
                                "sample " + row.sample_id + " has no mask_path but " + s.id() + " needs one");
                }
            }
        }

        std::vector<SampleResult> results(manifest.rows.size());
        parallel_for(manifest.rows.size(), args.jobs, [&](std::size_t i) {
            const ManifestRow& row = manifest.rows[i];
            SampleResult& out = results[i];
            std::string current = "(loading)";
            try {
                const UncertaintyMap map = read_map(row.map_path);
                std::optional<SegmentationMask> mask;
                if (row.mask_path) {
                    mask = read_mask(*row.mask_path);
                    if (mask->rows() != map.rows() || mask->cols() != map.cols()) {
                        throw Error(ErrorCode::ShapeMismatch, "mask and map differ in shape");
                    }
                }
                std::vector<std::optional<double>> computed(required.size());
                for (std::size_t k = 0; k < required.size(); ++k) {
                    current = required[k].id();
                    try {
                        computed[k] = required[k].evaluate(map, mask ? &*mask : nullptr, padding);
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::NoForeground) throw;
                        out.warnings.push_back("sample " + row.sample_id + ", " + current + ": no foreground; left empty");
                    }
                    if (required[k].is_spatial() && avg(map) == 0.0) {
                        out.warnings.push_back("sample " + row.sample_id + ", " + current +
                                               ": zero uncertainty mass; spatial mass ratio set to 0");
                    }
                }
                for (const auto& col : columns) {
                    current = col.header;
                    if (col.strategy) {
                        out.values.push_back(computed[slot.at(col.header)]);
                        continue;
                    }
                    const auto& names = col.model->feature_spec.strategies;
                    Eigen::VectorXd raw(static_cast<Eigen::Index>(names.size()));
                    bool complete = true;
                    for (std::size_t j = 0; j < names.size(); ++j) {
                        const auto& v = computed[slot.at(parse_strategy(names[j]).id())];
                        if (!v) complete = false;
                        raw(static_cast<Eigen::Index>(j)) = v.value_or(0.0);
                    }
                    if (complete) {
                        out.values.push_back(meta_score(*col.model, raw));
                    } else {
                        out.values.emplace_back();
                        out.warnings.push_back("sample " + row.sample_id + ", " + col.header +
                                               ": input feature missing; left empty");
                    }
                }
            } catch (const Error& e) {
                out.error = Error(e.code(), "sample " + row.sample_id + ", strategy " + current + ": " + e.what());
            }
        });

        ScoreTable table;
        for (const auto& col : columns) table.strategies.push_back(col.header);
        std::size_t warnings = 0;
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (results[i].error) throw *results[i].error;
            for (const auto& w : results[i].warnings) std::cerr << "warning: " << w << '\n';
            warnings += results[i].warnings.size();
            table.sample_ids.push_back(manifest.rows[i].sample_id);
            table.values.push_back(std::move(results[i].values));
        }
        write_scores(args.out, table);
        std::cout << "aggregated " << table.sample_ids.size() << " samples x " << table.strategies.size()
                  << " strategies -> " << args.out << " (" << warnings << " warnings)\n";
        return kExitOk;
    });
}

int run_gmm_fit(const GmmFitArgs& args) {
    return guarded([&] {
        const FeatureVariant variant = [&] {
            try {
                return parse_variant(args.variant);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }();
        FeatureSetSpec spec;
        if (variant == FeatureVariant::Custom) {
            if (args.strategies.empty()) throw UsageError("--variant custom needs --strategies");
            std::vector<std::string> ids;
            for (const auto& s : split_list(args.strategies)) ids.push_back(parse_or_usage(s).id());
            spec = FeatureSetSpec::custom(ids);
        } else {
            if (!args.strategies.empty()) throw UsageError("--strategies is only valid with --variant custom");
            spec = FeatureSetSpec::preset(variant);
        }

        ScoreTable scores = read_scores(args.features);
        for (auto& name : scores.strategies) name = canonical_or_raw(name);
        if (!args.manifest.empty()) {
            const Manifest manifest = read_manifest(args.manifest);
            std::set<std::string> iid;
            for (const auto& row : manifest.rows) {
                if (row.ood_label && *row.ood_label == 0) iid.insert(row.sample_id);
            }
            ScoreTable kept;
            kept.strategies = scores.strategies;
            for (std::size_t i = 0; i < scores.sample_ids.size(); ++i) {
                if (!iid.count(scores.sample_ids[i])) continue;
                kept.sample_ids.push_back(scores.sample_ids[i]);
                kept.values.push_back(scores.values[i]);
            }
            scores = std::move(kept);
        }
        const FeatureTable table = to_feature_table(scores, spec.strategies);

        MetaFitOptions options;
        options.k_max = args.kmax;
        options.epsilon = args.epsilon;
        options.em.seed = args.seed;
        options.em.restarts = args.restarts;
        options.em.max_iter = args.max_iter;
        options.em.tol = args.tol;
        options.em.ridge = args.ridge;
        if (options.k_max < 1 || options.em.restarts < 1 || options.em.max_iter < 1 || !(options.em.tol > 0.0) ||
            options.em.ridge < 0.0) {
            throw UsageError("--kmax, --restarts, --max-iter must be >= 1, --tol > 0 and --ridge >= 0");
        }

        const Standardization check = standardize_fit(epsilon_rescale(table.values, args.epsilon));
        for (std::size_t j : check.degenerate) {
            std::cerr << "warning: feature " << table.names[j] << " is constant on the fitting data; scaled by 1\n";
        }

        GmmModel model;
        if (!args.drop.empty() && !args.keep_only.empty()) throw UsageError("use either --drop or --keep-only");
        if (!args.drop.empty()) {
            model = ablate_drop(table, spec, parse_or_usage(args.drop).id(), options);
        } else if (!args.keep_only.empty()) {
            std::vector<std::string> keep;
            for (const auto& s : split_list(args.keep_only)) keep.push_back(parse_or_usage(s).id());
            model = ablate_keep(table, spec, keep, options);
        } else {
            model = fit_meta(table, spec, options);
        }
        save_model(args.out, model);
        std::printf("K=%zu d=%zu n=%zu BIC=%.6f loglik=%.6f -> %s\n", model.mixture.components(),
                    model.feature_spec.strategies.size(), model.fit.n_train, model.fit.bic, model.fit.loglik,
                    args.out.c_str());
        return kExitOk;
    });
}

int run_gmm_score(const GmmScoreArgs& args) {
    return guarded([&] {
        const GmmModel model = load_model(args.model);
        ScoreTable scores = read_scores(args.features);
        std::vector<std::size_t> cols;
        for (const auto& id : model.feature_spec.strategies) {
            std::optional<std::size_t> found;
            for (std::size_t c = 0; c < scores.strategies.size(); ++c) {
                if (canonical_or_raw(scores.strategies[c]) == id) found = c;
            }
            if (!found) throw Error(ErrorCode::MissingColumn, "feature column '" + id + "' missing");
            cols.push_back(*found);
        }
        if (std::find(scores.strategies.begin(), scores.strategies.end(), args.column) != scores.strategies.end()) {
            throw UsageError("column '" + args.column + "' already exists; choose another --column");
        }
        std::size_t warnings = 0;
        for (std::size_t i = 0; i < scores.sample_ids.size(); ++i) {
            Eigen::VectorXd raw(static_cast<Eigen::Index>(cols.size()));
            bool complete = true;
            for (std::size_t j = 0; j < cols.size(); ++j) {
                const auto& v = scores.values[i][cols[j]];
                if (!v) complete = false;
                raw(static_cast<Eigen::Index>(j)) = v.value_or(0.0);
            }
            if (complete) {
                scores.values[i].push_back(meta_score(model, raw));
            } else {
                scores.values[i].emplace_back();
                std::cerr << "warning: sample " << scores.sample_ids[i] << ": missing feature; NLL left empty\n";
                ++warnings;
            }
        }
        scores.strategies.push_back(args.column);
        write_scores(args.out, scores);
        std::cout << "scored " << scores.sample_ids.size() << " samples -> " << args.out << " (" << warnings
                  << " warnings)\n";
        return kExitOk;
    });
}

int run_eval(const EvalArgs& args) {
    return guarded([&] {
        if (args.task != "ood" && args.task != "fd") throw UsageError("--task must be 'ood' or 'fd'");
        if (args.bootstrap < 1) throw UsageError("--bootstrap must be at least 1");
        if (args.jobs < 1) throw UsageError("--jobs must be at least 1");
        const Metric metric = args.task == "ood" ? Metric::Auroc : Metric::Eaurc;
        const ScoreTable scores = read_scores(args.scores);
        const Manifest manifest = read_manifest(args.manifest);
        std::map<std::string, const ManifestRow*> by_id;
        for (const auto& row : manifest.rows) by_id[row.sample_id] = &row;

        std::vector<std::size_t> cols;
        if (args.strategies.empty()) {
            for (std::size_t c = 0; c < scores.strategies.size(); ++c) cols.push_back(c);
        } else {
            for (const auto& s : split_list(args.strategies)) {
                const auto it = std::find(scores.strategies.begin(), scores.strategies.end(), canonical_or_raw(s));
                if (it == scores.strategies.end()) throw Error(ErrorCode::MissingColumn, "score column '" + s + "' missing");
                cols.push_back(static_cast<std::size_t>(it - scores.strategies.begin()));
            }
        }
        std::vector<std::string> names;
        std::vector<std::size_t> usable;
        for (std::size_t c : cols) {
            const bool complete = std::all_of(scores.values.begin(), scores.values.end(),
                                              [c](const auto& row) { return row[c].has_value(); });
            if (complete) {
                names.push_back(scores.strategies[c]);
                usable.push_back(c);
            } else {
                std::cerr << "warning: strategy " << scores.strategies[c] << " has empty cells; skipped\n";
            }
        }
        if (names.empty()) throw Error(ErrorCode::Empty, "no strategy with complete scores");

        std::vector<EvalRecord> records;
        for (std::size_t i = 0; i < scores.sample_ids.size(); ++i) {
            const auto it = by_id.find(scores.sample_ids[i]);
            if (it == by_id.end()) {
                throw Error(ErrorCode::MissingColumn, "sample " + scores.sample_ids[i] + " not in manifest");
            }
            std::vector<double> values;
            for (std::size_t c : usable) values.push_back(*scores.values[i][c]);
            records.push_back({scores.sample_ids[i], FeatureVector(names, values), it->second->ood_label,
                               it->second->risk});
        }

        std::vector<BootstrapResult> boot(names.size());
        std::vector<double> full(names.size());
        std::vector<std::optional<Error>> errors(names.size());
        parallel_for(names.size(), args.jobs, [&](std::size_t k) {
            try {
                full[k] = evaluate_metric(records, names[k], metric);
                boot[k] = bootstrap_metric(records, names[k], metric, args.bootstrap, args.seed);
            } catch (const Error& e) {
                errors[k] = Error(e.code(), "strategy " + names[k] + ": " + e.what());
            }
        });
        for (const auto& e : errors) {
            if (e) throw *e;
        }

        const std::string dataset = args.dataset.empty() ? dataset_name(args.scores, "") : args.dataset;
        const std::string prefix = args.out_prefix.empty() ? dataset : args.out_prefix;
        CsvTable metrics;
        metrics.header = {"strategy", "dataset", "metric", "mean", "std", "full"};
        CsvTable samples;
        samples.header = {"resample"};
        samples.header.insert(samples.header.end(), names.begin(), names.end());
        for (std::size_t k = 0; k < names.size(); ++k) {
            metrics.rows.push_back({names[k], dataset, to_string(metric), format_double(boot[k].mean),
                                    format_double(boot[k].std), format_double(full[k])});
        }
        for (int b = 0; b < args.bootstrap; ++b) {
            std::vector<std::string> row{std::to_string(b)};
            for (const auto& r : boot) row.push_back(format_double(r.samples[static_cast<std::size_t>(b)]));
            samples.rows.push_back(std::move(row));
        }
        std::vector<std::vector<double>> sample_vectors;
        for (const auto& r : boot) sample_vectors.push_back(r.samples);
        const SignificanceMatrix sig = significance_matrix(names, sample_vectors, direction_of(metric));
        CsvTable pmatrix;
        pmatrix.header = {"strategy"};
        pmatrix.header.insert(pmatrix.header.end(), names.begin(), names.end());
        for (std::size_t a = 0; a < names.size(); ++a) {
            std::vector<std::string> row{names[a]};
            for (double p : sig.p_values[a]) row.push_back(format_double(p));
            pmatrix.rows.push_back(std::move(row));
        }
        write_csv(prefix + "_metrics.csv", metrics);
        write_csv(prefix + "_bootstrap.csv", samples);
        write_csv(prefix + "_pvalues.csv", pmatrix);
        for (std::size_t k = 0; k < names.size(); ++k) {
            std::printf("%-12s %s mean=%.4f std=%.4f\n", names[k].c_str(), to_string(metric).c_str(), boot[k].mean,
                        boot[k].std);
        }
        return kExitOk;
    });
}

int run_rank(const RankArgs& args) {
    return guarded([&] {
        if (args.inputs.empty()) throw UsageError("--inputs needs at least one bootstrap CSV");
        if (!(args.alpha > 0.0 && args.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
        const Metric metric = [&] {
            try {
                return parse_metric(args.metric);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }();
        const Direction direction = direction_of(metric);

        std::vector<std::string> datasets;
        std::vector<std::map<std::string, double>> tables;
        std::vector<SignificanceMatrix> matrices;
        for (const auto& path : args.inputs) {
            const CsvTable csv = read_csv(path);
            std::vector<std::string> names;
            std::vector<std::vector<double>> columns;
            for (std::size_t c = 0; c < csv.header.size(); ++c) {
                if (csv.header[c] == "resample") continue;
                names.push_back(csv.header[c]);
                std::vector<double> col;
                for (std::size_t r = 0; r < csv.rows.size(); ++r) {
                    col.push_back(parse_double(csv.rows[r][c], r + 1, csv.header[c]));
                }
                columns.push_back(std::move(col));
            }
            if (names.empty() || csv.rows.empty()) throw Error(ErrorCode::Empty, path + ": no bootstrap samples");
            std::map<std::string, double> means;
            for (std::size_t k = 0; k < names.size(); ++k) {
                double sum = 0.0;
                for (double v : columns[k]) sum += v;
                means[names[k]] = sum / static_cast<double>(columns[k].size());
            }
            datasets.push_back(dataset_name(path, "_bootstrap"));
            tables.push_back(std::move(means));
            matrices.push_back(significance_matrix(names, columns, direction));
        }
        const auto ranks = mean_rank(tables, direction);

        std::vector<std::pair<std::string, double>> ordered(ranks.begin(), ranks.end());
        std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
        const std::string prefix = args.out_prefix.empty() ? "rank" : args.out_prefix;

        CsvTable rank_csv;
        rank_csv.header = {"strategy", "mean_rank"};
        for (const auto& d : datasets) rank_csv.header.push_back(d);
        for (const auto& [name, rank] : ordered) {
            std::vector<std::string> row{name, format_double(rank)};
            for (const auto& t : tables) row.push_back(format_double(t.at(name)));
            rank_csv.rows.push_back(std::move(row));
        }
        write_csv(prefix + "_ranks.csv", rank_csv);

        // wins[a][b]: datasets on which a significantly outperforms b
        std::vector<std::string> names;
        for (const auto& entry : ordered) names.push_back(entry.first);
        std::vector<std::vector<int>> wins(names.size(), std::vector<int>(names.size(), 0));
        for (std::size_t t = 0; t < matrices.size(); ++t) {
            const auto& m = matrices[t];
            auto index = [&m](const std::string& n) {
                return static_cast<std::size_t>(std::find(m.names.begin(), m.names.end(), n) - m.names.begin());
            };
            CsvTable pcsv;
            pcsv.header = {"strategy"};
            pcsv.header.insert(pcsv.header.end(), names.begin(), names.end());
            for (std::size_t a = 0; a < names.size(); ++a) {
                std::vector<std::string> row{names[a]};
                for (std::size_t b = 0; b < names.size(); ++b) {
                    const double p = m.p_values[index(names[a])][index(names[b])];
                    row.push_back(format_double(p));
                    if (a != b && p < args.alpha) ++wins[a][b];
                }
                pcsv.rows.push_back(std::move(row));
            }
            write_csv(prefix + "_pvalues_" + datasets[t] + ".csv", pcsv);
        }
        CsvTable wins_csv;
        wins_csv.header = {"strategy"};
        wins_csv.header.insert(wins_csv.header.end(), names.begin(), names.end());
        for (std::size_t a = 0; a < names.size(); ++a) {
            std::vector<std::string> row{names[a]};
            for (int w : wins[a]) row.push_back(std::to_string(w));
            wins_csv.rows.push_back(std::move(row));
        }
        write_csv(prefix + "_wins.csv", wins_csv);

        for (const auto& [name, rank] : ordered) std::printf("%-12s %.3f\n", name.c_str(), rank);
        return kExitOk;
    });
}

int run_synth(const SynthArgs& args) {
    return guarded([&] {
        if (args.out_dir.empty()) throw UsageError("--out-dir is required");
        BenchmarkSpec spec;
        if (!args.spec.empty()) {
            spec = benchmark_spec_from_json(read_text(args.spec));
        } else {
            spec.n_iid = args.n_iid;
            spec.n_ood = args.n_ood;
            spec.seed = args.seed;
            spec.match_mean = args.match_mean;
            spec.masks = !args.no_masks;
            auto archetype = [&](const std::string& name, SynthSpec& s, Jitter& j) {
                s.pattern = parse_pattern(name);
                s.rows = s.cols = args.size;
                // defaults reproduce a low-mean noise map and a compact blob covering ~10% of the map
                s.mean = 0.09;
                s.amplitude = 0.09;
                s.level = 0.09;
                s.radius = 0.178 * static_cast<double>(args.size);
                s.thickness = std::max(2.0, 0.05 * static_cast<double>(args.size));
                s.high = 0.9;
                s.low = 0.0;
                j.level = 0.02;
                j.radius = 0.1 * s.radius;
                j.center = 0.125 * static_cast<double>(args.size);
            };
            archetype(args.iid_pattern, spec.iid, spec.iid_jitter);
            archetype(args.ood_pattern, spec.ood, spec.ood_jitter);
            for (const auto& s : split_list(args.ladder)) spec.ladder.push_back(parse_double(s, 0, "ladder"));
        }
        const auto samples = gen_benchmark(spec);

        const fs::path out(args.out_dir);
        std::error_code ec;
        fs::create_directories(out / "maps", ec);
        if (!ec && spec.masks) fs::create_directories(out / "masks", ec);
        if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out.string() + ": " + ec.message());

        Manifest manifest;
        for (const auto& s : samples) {
            ManifestRow row;
            row.sample_id = s.sample_id;
            row.map_path = fs::path("maps") / (s.sample_id + ".npy");
            write_npy(out / row.map_path, s.map.grid());
            if (s.mask) {
                row.mask_path = fs::path("masks") / (s.sample_id + ".npy");
                write_npy(out / *row.mask_path, s.mask->grid());
            }
            row.ood_label = s.ood_label;
            row.risk = s.risk;
            manifest.rows.push_back(std::move(row));
        }
        write_manifest(out / "manifest.csv", manifest);
        std::cout << "wrote " << samples.size() << " maps and " << (out / "manifest.csv").string() << '\n';
        return kExitOk;
    });
}

}  // namespace uagg::cli
