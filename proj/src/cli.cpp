#include "qcost/cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcost/combine.hpp"
#include "qcost/correlation.hpp"
#include "qcost/error.hpp"
#include "qcost/feedback.hpp"
#include "qcost/kernels.hpp"
#include "qcost/model.hpp"
#include "qcost/rng.hpp"
#include "qcost/synth.hpp"
#include "qcost/tuning.hpp"

namespace qcost::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest round-trip decimal form; keeps CSV output byte-stable.
std::string fmt(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.good()) throw Error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<QueryPlan> read_plans(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open plans file " + path);
    std::vector<QueryPlan> plans;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            plans.push_back(parse_plan(line));
        } catch (const Error& e) {
            throw Error(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (plans.empty()) throw Error(path + ": no plans");
    return plans;
}

std::vector<CombinedEstimate> read_estimates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open estimates file " + path);
    std::vector<CombinedEstimate> estimates;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            estimates.push_back(CombinedEstimate::from_json(line));
        } catch (const Error& e) {
            throw Error(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return estimates;
}

FeedbackStore read_feedback(const std::string& path, const BackboneSet& backbone) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open feedback file " + path);
    return FeedbackStore::load(in, backbone);
}

std::uint64_t require_seed(const RunConfig& config) {
    if (!config.seed) throw Error("this subcommand is stochastic: --seed is required");
    return *config.seed;
}

}  // namespace

BackboneSet backbone_from(const RunConfig& config) {
    if (config.backbone.empty()) return default_backbone();
    BackboneSet set;
    for (const auto& name : config.backbone) set.insert(kind_from_string(name));
    if (set.empty()) throw Error("backbone set must not be empty");
    return set;
}

void load_config_file(const std::string& path, RunConfig& config) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("config file " + path + ": " + e.what());
    }
    const auto set_str = [&](const char* key, std::string& field) {
        if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    set_str("plans", config.plans_path);
    set_str("models", config.models_path);
    set_str("feedback", config.feedback_path);
    set_str("estimates", config.estimates_path);
    set_str("out_dir", config.out_dir);
    if (j.contains("backbone")) config.backbone = j.at("backbone").get<std::vector<std::string>>();
    if (j.contains("threshold")) config.threshold = j.at("threshold").get<int>();
    if (j.contains("min_act_cost")) config.min_act_cost = j.at("min_act_cost").get<double>();
    if (j.contains("tau")) config.tau = j.at("tau").get<double>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("eta_prime_inf")) config.eta_prime_inf = j.at("eta_prime_inf").get<double>();
    if (j.contains("n_queries")) config.n_queries = j.at("n_queries").get<int>();
    if (j.contains("leaves_per_plan"))
        config.leaves_per_plan = j.at("leaves_per_plan").get<int>();
    if (j.contains("internals_per_plan"))
        config.internals_per_plan = j.at("internals_per_plan").get<int>();
    if (j.contains("card_lo")) config.card_lo = j.at("card_lo").get<double>();
    if (j.contains("card_hi")) config.card_hi = j.at("card_hi").get<double>();
    if (j.contains("noise_sd")) config.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("n_configs")) config.n_configs = j.at("n_configs").get<int>();
    if (j.contains("regression_cut"))
        config.regression_cut = j.at("regression_cut").get<double>();
}

int cmd_generate(const RunConfig& config) {
    const std::uint64_t seed = require_seed(config);
    const auto plans = synth_plans(
        config.n_queries, default_ground_truth(config.noise_sd),
        PlanShape{config.leaves_per_plan, config.internals_per_plan},
        CardRange{config.card_lo, config.card_hi}, default_opt_cost_model(), seed);

    std::ostringstream out;
    for (const auto& plan : plans) out << serialize_plan(plan) << '\n';
    const fs::path path = fs::path(config.out_dir) / "plans.jsonl";
    atomic_write(path, out.str());
    std::cout << "wrote " << plans.size() << " plans to " << path.string() << " (seed " << seed
              << ")\n";
    return 0;
}

int cmd_train(const RunConfig& config) {
    if (config.plans_path.empty()) throw Error("train: --plans is required");
    const auto plans = read_plans(config.plans_path);
    const BackboneSet backbone = backbone_from(config);

    FeedbackStore store(backbone);
    int harvested = 0;
    for (const auto& plan : plans) harvested += store.ingest(plan);
    std::cout << "harvested " << harvested << " feedback records from " << plans.size()
              << " plans\n";

    for (const auto& [kind, count] : store.counts_by_kind()) {
        const bool ok = count >= config.threshold;
        std::cout << "  " << to_string(kind) << ": " << count << " records -> "
                  << (ok ? "trainable" : "insufficient") << " (threshold " << config.threshold
                  << ")\n";
    }

    const ModelSet models = train_all(store, config.threshold);
    for (const auto& [kind, model] : models) {
        std::cout << "  model " << to_string(kind) << ": residual_rms "
                  << fmt(model.residual_rms) << " ms over " << model.trained_on << " records"
                  << (model.ridge_fallback ? " [ridge fallback: rank-deficient design]" : "")
                  << "\n";
    }

    std::ostringstream feedback_out;
    store.dump(feedback_out);
    const fs::path fb_path = fs::path(config.out_dir) / "feedback.jsonl";
    atomic_write(fb_path, feedback_out.str());
    const fs::path model_path = fs::path(config.out_dir) / "models.json";
    atomic_write(model_path, models.to_json());
    std::cout << "wrote " << models.size() << " models to " << model_path.string() << "\n";
    return 0;
}

int cmd_estimate(const RunConfig& config) {
    if (config.plans_path.empty()) throw Error("estimate: --plans is required");
    if (config.models_path.empty()) throw Error("estimate: --models is required");
    if (config.feedback_path.empty()) throw Error("estimate: --feedback is required");
    const auto plans = read_plans(config.plans_path);
    const ModelSet models = ModelSet::from_json(read_file(config.models_path));
    const BackboneSet backbone = backbone_from(config);
    const FeedbackStore store = read_feedback(config.feedback_path, backbone);

    std::optional<PivotChoice> pivot;
    if (!models.empty()) {
        pivot = pick_pivot(store, PivotEligibility{config.min_act_cost});
        std::cout << "pivot: record_id=" << pivot->record_id << " opt_cost="
                  << fmt(pivot->opt_cost) << " act_cost=" << fmt(pivot->act_cost)
                  << " lambda=" << fmt(pivot->lambda) << "\n";
    }

    std::ostringstream out;
    for (const auto& plan : plans) {
        const CombinedEstimate est = combine(plan, models, pivot);
        out << est.to_json() << '\n';
        std::cout << plan.query_id << " total=" << fmt(est.total) << "\n";
    }
    const fs::path path = fs::path(config.out_dir) / "estimates.jsonl";
    atomic_write(path, out.str());
    std::cout << "wrote " << plans.size() << " estimates to " << path.string() << "\n";
    return 0;
}

namespace {

std::string figure_lower_bounds_csv(double eta_prime_inf) {
    std::ostringstream csv;
    csv << "eta,f,g\n";
    for (int i = 10; i <= 500; ++i) {
        const double eta = i / 10.0;
        csv << fmt(eta) << ',' << fmt(lower_bound_f(eta, eta_prime_inf)) << ','
            << fmt(lower_bound_g(eta, eta_prime_inf)) << '\n';
    }
    return csv.str();
}

std::string figure_eta0_csv() {
    std::ostringstream csv;
    csv << "alpha,eta0_eps_0.05,eta0_eps_0.01\n";
    const auto eta0_raw = [](double alpha, double eps) {
        const double k = 1.0 / ((1.0 - eps) * (1.0 - eps)) - 1.0;
        return std::sqrt((1.0 - alpha * alpha) / k) - alpha;
    };
    for (int i = -100; i <= 100; ++i) {
        const double alpha = i / 100.0;
        csv << fmt(alpha) << ',' << fmt(eta0_raw(alpha, 0.05)) << ','
            << fmt(eta0_raw(alpha, 0.01)) << '\n';
    }
    return csv.str();
}

std::string figure_eta0max_csv() {
    std::ostringstream csv;
    csv << "eps,eta0_max,eta0_max_positive\n";
    for (int i = 1; i <= 100; ++i) {
        const double eps = i * 0.005;
        csv << fmt(eps) << ',' << fmt(eta_0_max(eps).eta0_max) << ','
            << fmt(eta_0_max_positive(eps)) << '\n';
    }
    return csv.str();
}

std::string figure_rho_vs_eta_csv() {
    std::vector<double> etas;
    for (int i = 0; i <= 500; ++i) etas.push_back(i / 10.0);
    std::vector<double> rho0(etas.size());
    std::vector<double> rho05(etas.size());
    kernels::rho_vs_eta(0.0, etas, rho0);
    kernels::rho_vs_eta(0.5, etas, rho05);
    std::ostringstream csv;
    csv << "eta,rho_alpha_0,rho_alpha_0.5\n";
    for (std::size_t i = 0; i < etas.size(); ++i) {
        csv << fmt(etas[i]) << ',' << fmt(rho0[i]) << ',' << fmt(rho05[i]) << '\n';
    }
    return csv.str();
}

}  // namespace

int cmd_analyze(const RunConfig& config) {
    if (config.plans_path.empty()) throw Error("analyze: --plans is required");
    const auto plans = read_plans(config.plans_path);
    const BackboneSet backbone = backbone_from(config);

    std::vector<CombinedEstimate> estimates;
    if (!config.estimates_path.empty()) {
        estimates = read_estimates(config.estimates_path);
    } else {
        if (config.models_path.empty() || config.feedback_path.empty())
            throw Error("analyze: provide --estimates, or --models and --feedback");
        const ModelSet models = ModelSet::from_json(read_file(config.models_path));
        const FeedbackStore store = read_feedback(config.feedback_path, backbone);
        std::optional<PivotChoice> pivot;
        if (!models.empty()) pivot = pick_pivot(store, PivotEligibility{config.min_act_cost});
        for (const auto& plan : plans) estimates.push_back(combine(plan, models, pivot));
    }

    const WorkloadDecomposition d = decompose(plans, estimates, backbone);
    const CorrelationStats s = stats(d);
    const auto plan_actual = d.plan_actuals();
    const auto plan_estimate = d.plan_estimates();
    const double rho_pearson = pearson(plan_actual, plan_estimate);
    const double rho_spearman = spearman(plan_actual, plan_estimate);

    std::cout << "eta' infinity stand-in: " << fmt(config.eta_prime_inf) << "\n";
    std::cout << "n=" << d.queries.size() << " eta=" << fmt(s.eta) << " eta'="
              << fmt(s.eta_prime) << " alpha=" << fmt(s.alpha) << " beta=" << fmt(s.beta)
              << " gamma=" << fmt(s.gamma) << "\n";
    std::cout << "pearson(P,P')=" << fmt(rho_pearson) << " spearman(P,P')="
              << fmt(rho_spearman) << "\n";

    json report;
    report["n_queries"] = d.queries.size();
    json js;
    js["eta"] = s.eta;
    js["eta_prime"] = s.eta_prime;
    js["alpha"] = s.alpha;
    js["beta"] = s.beta;
    js["gamma"] = s.gamma;
    js["sigma_L"] = s.sigma_L;
    js["sigma_I"] = s.sigma_I;
    js["sigma_Lp"] = s.sigma_Lp;
    js["sigma_Ip"] = s.sigma_Ip;
    if (s.lambda) js["lambda"] = *s.lambda;
    report["stats"] = std::move(js);
    report["pearson_PPprime"] = rho_pearson;
    report["spearman_PPprime"] = rho_spearman;
    report["rho_closed_form"] = rho_closed_form(s.eta, s.eta_prime, s.alpha, s.beta, s.gamma);

    json bounds;
    bounds["f"] = lower_bound_f(s.eta, s.eta_prime);
    bounds["g"] = lower_bound_g(s.eta, s.eta_prime);
    bounds["eta_prime_inf_stand_in"] = config.eta_prime_inf;
    bounds["f_at_inf"] = lower_bound_f(s.eta, config.eta_prime_inf);
    bounds["g_at_inf"] = lower_bound_g(s.eta, config.eta_prime_inf);
    report["bounds"] = std::move(bounds);

    json approx;
    approx["rho_approx"] = rho_approx(s.eta, s.alpha);
    json curve;
    curve["epsilons"] = {0.05, 0.01};
    json curve_alpha = json::array();
    json curve_eta0 = json::array();
    for (int i = -100; i <= 100; ++i) {
        const double alpha = i / 100.0;
        curve_alpha.push_back(alpha);
        json row = json::array();
        for (const double eps : {0.05, 0.01}) {
            const double k = 1.0 / ((1.0 - eps) * (1.0 - eps)) - 1.0;
            row.push_back(std::sqrt((1.0 - alpha * alpha) / k) - alpha);
        }
        curve_eta0.push_back(std::move(row));
    }
    curve["alpha"] = std::move(curve_alpha);
    curve["eta_0"] = std::move(curve_eta0);
    approx["eta_0_curve"] = std::move(curve);
    report["approx"] = std::move(approx);

    if (s.eta >= 1.0 && s.beta > 0.0 && s.beta < 1.0 && s.gamma > 0.0 && s.gamma < 1.0) {
        const RhoExtrema e = rho_extrema_in_eta_prime(s.eta, s.alpha, s.beta, s.gamma);
        json je;
        je["stationary_eta_prime"] = e.stationary_eta_prime;
        je["rho_max"] = e.rho_max;
        je["rho_at_0"] = e.rho_at_0;
        je["rho_at_inf"] = e.rho_at_inf;
        je["rho_min"] = e.rho_min;
        report["extrema"] = std::move(je);
    } else {
        report["extrema"] = nullptr;
    }

    const fs::path out_dir(config.out_dir);
    atomic_write(out_dir / "report.json", report.dump(2) + "\n");
    atomic_write(out_dir / "lower_bounds_vs_eta.csv", figure_lower_bounds_csv(config.eta_prime_inf));
    atomic_write(out_dir / "eta0_vs_alpha.csv", figure_eta0_csv());
    atomic_write(out_dir / "eta0max_vs_eps.csv", figure_eta0max_csv());
    atomic_write(out_dir / "rho_vs_eta.csv", figure_rho_vs_eta_csv());
    std::cout << "wrote report.json and figure CSVs to " << out_dir.string() << "\n";
    return 0;
}

int cmd_tune(const RunConfig& config) {
    const std::uint64_t seed = require_seed(config);
    TuningSuiteSpec spec;
    spec.n_queries = config.n_queries;
    spec.n_configs = config.n_configs;
    spec.leaves_per_plan = config.leaves_per_plan;
    spec.noise_sd = config.noise_sd;
    spec.seed = seed;
    const TuningSuite suite = build_tuning_suite(spec);
    const BackboneSet backbone = backbone_from(config);

    // Feedback protocol: each query contributes up to five executed plans,
    // sampled across the nested configurations.
    FeedbackStore store(backbone);
    Rng sampler(derive_seed(seed, 0xfeedbacc));
    for (const auto& query_id : suite.query_ids) {
        const int picks = std::min<int>(5, static_cast<int>(suite.configs.size()));
        std::vector<std::size_t> order(suite.configs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[sampler.uniform_int(i)]);
        }
        for (int k = 0; k < picks; ++k) {
            store.ingest(suite.oracle.plan_for(query_id, suite.configs[order[k]].id));
        }
    }

    const ModelSet models = train_all(store, config.threshold);
    const PivotChoice pivot = pick_pivot(store, PivotEligibility{config.min_act_cost});
    std::cout << "feedback: " << store.records().size() << " records, " << models.size()
              << " trained models, pivot record_id=" << pivot.record_id << " lambda="
              << fmt(pivot.lambda) << "\n";

    std::vector<TuningOutcome> outcomes;
    std::ostringstream csv;
    csv << "query_id,mode,old,new,est_improvement,act_improvement,recommended\n";
    for (const Estimator mode : {Estimator::Optimizer, Estimator::Combined}) {
        for (const auto& query_id : suite.query_ids) {
            for (const auto& old_config : suite.configs) {
                const TuningOutcome out =
                    tune(query_id, suite.configs, old_config, mode, config.tau, suite.oracle,
                         models, pivot);
                csv << out.query_id << ',' << to_string(out.mode) << ',' << out.old_config
                    << ',' << out.new_config << ',' << fmt(out.est_improvement) << ','
                    << fmt(out.act_improvement) << ',' << (out.recommended ? "true" : "false")
                    << '\n';
                outcomes.push_back(out);
            }
        }
    }

    const RegressionReport report = regression_report(outcomes, config.regression_cut);
    json jrep;
    jrep["regression_cut"] = report.regression_cut;
    jrep["tau"] = config.tau;
    for (const auto& [mode, hist] : report.by_mode) {
        json jh;
        jh["bins"] = hist.bins;
        jh["total"] = hist.total;
        jh["recommended"] = hist.recommended;
        jh["regressions"] = hist.regressions;
        jrep["modes"][to_string(mode)] = std::move(jh);
        std::cout << to_string(mode) << ": " << hist.recommended << " recommended, "
                  << hist.regressions << " regressions (actual improvement < "
                  << fmt(report.regression_cut) << ")\n";
    }

    const fs::path out_dir(config.out_dir);
    atomic_write(out_dir / "tuning.csv", csv.str());
    atomic_write(out_dir / "tuning_histogram.json", jrep.dump(2) + "\n");
    std::cout << "wrote tuning.csv and tuning_histogram.json to " << out_dir.string() << "\n";
    return 0;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Feedback-calibrated query cost estimation toolkit"};
    app.require_subcommand(1);

    RunConfig config;

    // The config file provides defaults; flags seen on the command line then
    // overwrite individual fields (CLI11 only assigns bound variables when
    // the flag is present).
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") load_config_file(argv[i + 1], config);
    }

    std::string config_path;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (defaults; flags override)");
        cmd->add_option("--plans", config.plans_path, "plan documents, one JSON object per line");
        cmd->add_option("--models", config.models_path, "model file (JSON array)");
        cmd->add_option("--feedback", config.feedback_path, "feedback records (JSON lines)");
        cmd->add_option("--estimates", config.estimates_path,
                        "precomputed estimates (JSON lines)");
        cmd->add_option("--backbone", config.backbone,
                        "backbone kind names (default: TableScan IndexScan IndexSeek)");
        cmd->add_option("--threshold", config.threshold, "sufficiency threshold");
        cmd->add_option("--min-act-cost", config.min_act_cost,
                        "pivot eligibility floor in ms");
        cmd->add_option("--tau", config.tau, "estimated-improvement recommendation gate");
        cmd->add_option("--seed", config.seed, "run seed (required for stochastic commands)");
        cmd->add_option("--out-dir", config.out_dir, "output directory");
        cmd->add_option("--eta-prime-inf", config.eta_prime_inf,
                        "numerical stand-in for eta' -> infinity");
    };

    CLI::App* generate = app.add_subcommand("generate", "synthesize an annotated workload");
    add_common(generate);
    generate->add_option("--n-queries", config.n_queries, "queries to generate");
    generate->add_option("--leaves", config.leaves_per_plan, "leaf operators per plan");
    generate->add_option("--internals", config.internals_per_plan, "internal operators per plan");
    generate->add_option("--card-lo", config.card_lo, "cardinality range low end");
    generate->add_option("--card-hi", config.card_hi, "cardinality range high end");
    generate->add_option("--noise-sd", config.noise_sd, "actual-cost noise (ms)");

    CLI::App* train = app.add_subcommand("train", "harvest feedback and fit operator models");
    add_common(train);

    CLI::App* estimate = app.add_subcommand("estimate", "combine model and optimizer costs");
    add_common(estimate);

    CLI::App* analyze = app.add_subcommand("analyze", "workload statistics, bounds, figure data");
    add_common(analyze);

    CLI::App* tune = app.add_subcommand("tune", "simulated index tuning, both estimators");
    add_common(tune);
    tune->add_option("--n-queries", config.n_queries, "queries in the tuning suite");
    tune->add_option("--n-configs", config.n_configs, "nested configurations per query");
    tune->add_option("--noise-sd", config.noise_sd, "actual-cost noise (ms)");
    tune->add_option("--regression-cut", config.regression_cut,
                     "actual-improvement threshold counted as regression");

    try {
        app.parse(argc, argv);
        if (generate->parsed()) return cmd_generate(config);
        if (train->parsed()) return cmd_train(config);
        if (estimate->parsed()) return cmd_estimate(config);
        if (analyze->parsed()) return cmd_analyze(config);
        if (tune->parsed()) return cmd_tune(config);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
}

}  // namespace qcost::cli
