#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "powerlines/batch_laws.hpp"
#include "powerlines/ema_sim.hpp"
#include "powerlines/frontier.hpp"
#include "powerlines/run_store.hpp"
#include "powerlines/serialize.hpp"
#include "powerlines/synth_world.hpp"
#include "powerlines/timescale.hpp"

namespace fs = std::filesystem;
using namespace powerlines;

namespace {

struct CliConfig {
    std::int64_t seq_len_default = kDefaultSeqLen;
    std::int64_t proxy_width = kDefaultProxyWidth;
    int bootstrap_iters = 1000;
    double bootstrap_frac = 0.8;
    std::uint64_t seed = 0;
};

void apply_config_file(CliConfig& cfg, const fs::path& path) {
    const nlohmann::json j = load_json(path);
    cfg.seq_len_default = j.value("seq_len_default", cfg.seq_len_default);
    cfg.proxy_width = j.value("proxy_width", cfg.proxy_width);
    cfg.bootstrap_iters = j.value("bootstrap_iters", cfg.bootstrap_iters);
    cfg.bootstrap_frac = j.value("bootstrap_frac", cfg.bootstrap_frac);
    cfg.seed = j.value("seed", cfg.seed);
}

void validate_config(const CliConfig& cfg) {
    if (cfg.seq_len_default <= 0 || cfg.proxy_width <= 0 || cfg.bootstrap_iters <= 0)
        throw NonPositive("config values must be positive");
    if (cfg.bootstrap_frac <= 0.0 || cfg.bootstrap_frac >= 1.0)
        throw Error("bootstrap_frac must lie in (0, 1)");
}

BootstrapConfig bootstrap_of(const CliConfig& cfg) {
    return {cfg.bootstrap_frac, cfg.bootstrap_iters, cfg.seed};
}

// Removes everything it registered unless committed, so failed commands
// leave no partial outputs behind.
class OutputGuard {
   public:
    ~OutputGuard() {
        if (committed_) return;
        for (const auto& p : paths_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }
    fs::path track(fs::path p) {
        paths_.push_back(p);
        return p;
    }
    void commit() { committed_ = true; }

   private:
    std::vector<fs::path> paths_;
    bool committed_ = false;
};

RunFormat detect_format(const fs::path& path, const std::string& flag) {
    if (flag == "csv") return RunFormat::Csv;
    if (flag == "jsonl") return RunFormat::Jsonl;
    return path.extension() == ".jsonl" ? RunFormat::Jsonl : RunFormat::Csv;
}

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    return p.string() + suffix;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_fit_tau(const CliConfig& cfg, const std::string& runs_path,
                const std::string& format, const std::string& out_path) {
    const RunSet rs =
        load_runs(runs_path, detect_format(runs_path, format), cfg.proxy_width);
    const TauLaw law = fit_tau_pipeline(rs, bootstrap_of(cfg));

    OutputGuard guard;
    save_json(tau_law_to_json(law), guard.track(out_path));
    {
        std::ofstream csv(guard.track(with_suffix(out_path, "_points.csv")));
        csv << "tpp,tau_opt,n_params,d_tokens\n";
        for (const auto& p : law.fit_points)
            csv << fmt(p.tpp) << ',' << fmt(p.tau_opt) << ',' << p.n_params << ','
                << p.d_tokens << '\n';
    }
    guard.commit();

    std::cout << "tau law: tau_opt(TPP) = " << fmt6(law.law.coeff) << " * TPP^"
              << fmt6(law.law.exponent) << "\n";
    std::cout << "r_squared (log-log): " << fmt6(law.law.r_squared) << "\n";
    if (law.law.has_quantiles)
        std::cout << "exponent bootstrap 10/90: (" << fmt6(law.law.exp_q10) << ", "
                  << fmt6(law.law.exp_q90) << ")\n";
    std::cout << "fit points: " << law.fit_points.size() << "  tau_opt(20) = "
              << fmt6(law.predict(20.0)) << "\n";
    return 0;
}

int cmd_recommend_lambda(const CliConfig& cfg, double n, double d, double batch_seq,
                         std::int64_t seq_len, double eta, double eta_base,
                         std::int64_t width, const std::string& law_path,
                         const std::string& bcrit_path, bool as_json) {
    const TauLaw law = tau_law_from_json(load_json(law_path));
    if (seq_len <= 0) seq_len = cfg.seq_len_default;
    double eta_peak = eta;
    if (eta_peak <= 0) {
        if (eta_base <= 0 || width <= 0)
            throw NonPositive("need --eta, or --eta-base with --width");
        eta_peak = mup_adjust_lr(eta_base, cfg.proxy_width, width);
    }
    const double b_tokens = batch_seq * static_cast<double>(seq_len);

    double b_crit_tokens = 0.0;
    if (!bcrit_path.empty()) {
        const BatchScalingLaw bcrit = batch_law_from_json(load_json(bcrit_path));
        b_crit_tokens = bcrit.predict_tokens(d);
    }

    std::vector<std::string> warnings;
    const double lambda = lambda_opt(b_tokens, eta_peak, d, n, law, &warnings,
                                     b_crit_tokens);
    const double tpp = d / n;
    const double tau = law.predict(tpp);
    print_warnings(warnings);

    if (as_json) {
        nlohmann::json j{{"lambda_opt", lambda},
                         {"tau_opt", tau},
                         {"tpp", tpp},
                         {"eta_peak", eta_peak},
                         {"warnings", warnings}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "TPP:        " << fmt6(tpp) << "\n"
                  << "tau_opt:    " << fmt6(tau) << "\n"
                  << "eta_peak:   " << fmt6(eta_peak) << "\n"
                  << "lambda_opt: " << fmt6(lambda) << "\n";
    }
    return 0;
}

int cmd_fit_bopt(const CliConfig& cfg, const std::string& runs_path,
                 const std::string& format, const std::string& out_path,
                 std::int64_t min_b) {
    const RunSet rs =
        load_runs(runs_path, detect_format(runs_path, format), cfg.proxy_width);
    const std::optional<std::int64_t> min_batch =
        min_b > 0 ? std::optional<std::int64_t>(min_b) : std::nullopt;

    auto groups = group_runs(rs, {RunField::NParams, RunField::DTokens});
    std::vector<XY> pts;
    std::vector<std::pair<GroupKey, double>> table;
    std::int64_t seq_len = rs.records.empty() ? cfg.seq_len_default : rs.records[0].seq_len;
    for (const auto& [key, records] : groups) {
        const double bopt = measure_bopt(records, min_batch);
        pts.push_back({static_cast<double>(key[1]), bopt});
        table.emplace_back(key, bopt);
    }
    const BatchScalingLaw law = fit_batch_scaling_law(
        pts, BatchLawKind::BoptInD, BatchUnits::Sequences, seq_len, bootstrap_of(cfg));

    OutputGuard guard;
    save_json(batch_law_to_json(law), guard.track(out_path));
    {
        std::ofstream csv(guard.track(with_suffix(out_path, "_points.csv")));
        csv << "n_params,d_tokens,b_opt_sequences\n";
        for (const auto& [key, bopt] : table)
            csv << key[0] << ',' << key[1] << ',' << fmt(bopt) << '\n';
    }
    guard.commit();

    std::cout << "b_opt law: B_opt(D) = " << fmt6(law.law.coeff) << " * D^"
              << fmt6(law.law.exponent) << " sequences (seq_len " << seq_len << ")\n";
    std::cout << "r_squared (log-log): " << fmt6(law.law.r_squared) << "\n";
    if (law.law.has_quantiles)
        std::cout << "exponent bootstrap 10/90: (" << fmt6(law.law.exp_q10) << ", "
                  << fmt6(law.law.exp_q90) << ")\n";
    return 0;
}

int cmd_fit_bcrit(const CliConfig& cfg, const std::string& runs_path,
                  const std::string& format, const std::vector<double>& loss_targets,
                  const std::string& out_path, std::int64_t min_b) {
    const RunSet rs =
        load_runs(runs_path, detect_format(runs_path, format), cfg.proxy_width);
    const std::optional<std::int64_t> min_batch =
        min_b > 0 ? std::optional<std::int64_t>(min_b) : std::nullopt;

    std::vector<std::string> warnings;
    const BcritPipelineResult result =
        bcrit_pipeline(rs, loss_targets, bootstrap_of(cfg), min_batch, &warnings);
    print_warnings(warnings);

    OutputGuard guard;
    save_json(batch_law_to_json(result.law), guard.track(out_path));
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& cp : result.points) arr.push_back(crit_point_to_json(cp));
        save_json(arr, guard.track(with_suffix(out_path, "_critpoints.json")));
    }
    // One tradeoff table per (N, loss target) for the step/data panels.
    {
        std::ofstream csv(guard.track(with_suffix(out_path, "_tradeoff.csv")));
        csv << "n_params,loss_target,batch_sequences,d_tokens,steps\n";
        for (const auto& [n, family] : result.families) {
            for (double target : loss_targets) {
                for (const auto& [b, law] : family.laws) {
                    if (target <= law.irreducible) continue;
                    const InvertResult inv = invert_saturating(law, target);
                    const double steps =
                        inv.d_tokens / (static_cast<double>(b) * family.seq_len);
                    csv << n << ',' << fmt(target) << ',' << b << ','
                        << fmt(inv.d_tokens) << ',' << fmt(steps) << '\n';
                }
            }
        }
    }
    guard.commit();

    std::cout << "b_crit law: B_crit(D_min) = " << fmt6(result.law.law.coeff)
              << " * D_min^" << fmt6(result.law.law.exponent) << " sequences\n";
    std::cout << "r_squared (log-log): " << fmt6(result.law.law.r_squared) << "\n";
    if (result.law.law.has_quantiles)
        std::cout << "exponent bootstrap 10/90: (" << fmt6(result.law.law.exp_q10)
                  << ", " << fmt6(result.law.law.exp_q90) << ")\n";
    for (const auto& cp : result.points)
        std::cout << "  L=" << fmt6(cp.loss_target) << "  D_min=" << fmt6(cp.d_min)
                  << "  S_min=" << fmt6(cp.s_min)
                  << "  B_crit=" << fmt6(cp.b_crit_sequences) << " seq\n";
    return 0;
}

int cmd_pareto(const CliConfig& cfg, const std::string& chinchilla_path,
               const std::string& bcrit_path, const std::string& bopt_path, double loss,
               const std::string& time_model_name, const std::vector<double>& n_grid,
               const std::string& out_path) {
    (void)cfg;
    const ChinchillaFit fit = chinchilla_from_json(load_json(chinchilla_path));
    const BatchScalingLaw crit_law = batch_law_from_json(load_json(bcrit_path));
    std::optional<BatchScalingLaw> bopt_law;
    if (!bopt_path.empty()) bopt_law = batch_law_from_json(load_json(bopt_path));

    TimeModel model;
    if (time_model_name == "flops-per-batch")
        model = TimeModel::FlopsPerBatch;
    else if (time_model_name == "steps")
        model = TimeModel::Steps;
    else
        throw Error("unknown time model: " + time_model_name);

    // Fail before writing anything if part of the grid is infeasible.
    std::vector<double> feasible;
    double worst_floor = 0.0;
    for (double n : n_grid) {
        if (loss > fit.model_floor(n))
            feasible.push_back(n);
        else
            worst_floor = std::max(worst_floor, fit.model_floor(n));
    }
    if (feasible.size() != n_grid.size()) {
        std::cerr << "feasible N range for loss " << fmt6(loss) << ": "
                  << (feasible.empty()
                          ? std::string("none")
                          : fmt6(*std::min_element(feasible.begin(), feasible.end())) +
                                " .. " +
                                fmt6(*std::max_element(feasible.begin(), feasible.end())))
                  << "\n";
        throw BelowModelFloor(loss, worst_floor);
    }

    std::vector<IsoLossCurve> curves;
    curves.reserve(n_grid.size());
    for (double n : n_grid)
        curves.push_back(make_iso_loss_curve(fit, loss, n, crit_law,
                                             bopt_law ? &*bopt_law : nullptr));

    const std::vector<ParetoPoint> annotated = annotate_dominance(curves, model);

    OutputGuard guard;
    {
        std::ofstream csv(guard.track(with_suffix(out_path, "_curves.csv")));
        csv << "n_params,base_tpp,b_sequences,c_plus,time,actual_tpp,on_frontier\n";
        for (const auto& p : annotated)
            csv << fmt(p.n_params) << ',' << fmt(p.d_min / p.n_params) << ','
                << fmt(p.b_sequences) << ',' << fmt(p.c_plus) << ',' << fmt(p.time)
                << ',' << fmt(p.actual_tpp) << ',' << (p.dominated ? 0 : 1) << '\n';
    }
    {
        std::ofstream csv(guard.track(with_suffix(out_path, "_frontier.csv")));
        csv << "n_params,base_tpp,b_sequences,c_plus,time,actual_tpp\n";
        for (const auto& p : annotated) {
            if (p.dominated) continue;
            csv << fmt(p.n_params) << ',' << fmt(p.d_min / p.n_params) << ','
                << fmt(p.b_sequences) << ',' << fmt(p.c_plus) << ',' << fmt(p.time)
                << ',' << fmt(p.actual_tpp) << '\n';
        }
    }
    guard.commit();

    std::cout << "frontier points (time model " << time_model_name << ", L=" << fmt6(loss)
              << "):\n";
    std::cout << "  n_params   base_tpp   b_seq      c_plus      time       actual_tpp\n";
    for (const auto& p : annotated) {
        if (p.dominated) continue;
        std::printf("  %-10.4g %-10.4g %-10.4g %-11.5g %-10.5g %-10.4g\n", p.n_params,
                    p.d_min / p.n_params, p.b_sequences, p.c_plus, p.time, p.actual_tpp);
    }
    return 0;
}

int cmd_ema_sim(const std::vector<std::int64_t>& steps_list, double warmup_frac,
                double eta_peak, double tau, const std::string& out_path) {
    if (tau <= 0) throw NonPositive("--tau must be positive");
    std::vector<EmaCoefficients> coeffs;
    coeffs.reserve(steps_list.size());
    for (std::int64_t s : steps_list) {
        LrSchedule sched{s, warmup_frac, eta_peak};
        // lambda chosen so tau_ema = 1 / (eta * lambda * S) hits the target.
        const double lambda = 1.0 / (eta_peak * tau * static_cast<double>(s));
        coeffs.push_back(ema_coefficients(sched, lambda));
    }

    OutputGuard guard;
    {
        std::ofstream csv(guard.track(out_path));
        csv << "total_steps,data_fraction,density\n";
        for (const auto& c : coeffs) {
            for (std::int64_t i = 1; i <= c.total_steps; ++i) {
                const double f =
                    static_cast<double>(i) / static_cast<double>(c.total_steps);
                csv << c.total_steps << ',' << fmt(f) << ','
                    << fmt(c.coeffs[static_cast<std::size_t>(i - 1)] *
                           static_cast<double>(c.total_steps))
                    << '\n';
            }
        }
    }
    guard.commit();

    std::cout << "tau_ema = " << fmt6(tau) << ", warmup " << fmt6(warmup_frac) << "\n";
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        for (std::size_t j = i + 1; j < coeffs.size(); ++j)
            std::cout << "max relative deviation S=" << coeffs[i].total_steps
                      << " vs S=" << coeffs[j].total_steps << ": "
                      << fmt6(compare_shapes(coeffs[i], coeffs[j])) << "\n";
    return 0;
}

std::vector<DesignRow> load_design(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "empty design file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "n_params,d_tokens,batch_sequences,weight_decay,eta_peak")
        throw ParseError(1,
                         "design header must be "
                         "n_params,d_tokens,batch_sequences,weight_decay,eta_peak");
    std::vector<DesignRow> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        DesignRow r;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &r.n_params, &r.d_tokens,
                        &r.batch_sequences, &r.weight_decay, &r.eta_peak) != 5)
            throw ParseError(lineno, "expected 5 numeric fields");
        rows.push_back(r);
    }
    return rows;
}

int cmd_synth(const std::string& world_path, const std::string& design_path,
              const std::string& out_path, std::optional<std::uint64_t> seed_override) {
    WorldSpec world = world_from_json(load_json(world_path));
    if (seed_override) world.seed = *seed_override;
    const std::vector<DesignRow> design = load_design(design_path);
    const RunSet rs = gen_design(world, design);

    OutputGuard guard;
    write_runs(rs, guard.track(out_path), RunFormat::Csv);
    guard.commit();
    std::cout << "wrote " << rs.records.size() << " synthetic runs to " << out_path
              << "\n";
    return 0;
}

int cmd_convert_law(const std::string& form_name, double coeff, double exponent,
                    double compute, std::int64_t seq_len, bool as_json) {
    const LiteratureForm form = parse_literature_form(form_name);
    if (form == LiteratureForm::Zhang) {
        if (coeff <= 0) throw NonPositive("--coeff is required for form zhang");
        const BatchScalingLaw law = convert_zhang_law(coeff, exponent, seq_len);
        if (as_json) {
            std::cout << batch_law_to_json(law).dump(2) << "\n";
        } else {
            std::cout << "B_crit(D) = " << fmt6(law.law.coeff) << " * D^"
                      << fmt6(law.law.exponent) << " sequences (seq_len " << seq_len
                      << ")\n";
        }
        return 0;
    }
    if (compute <= 0) throw NonPositive("--compute is required for form deepseek");
    const BatchPrediction p = deepseek_bopt(compute, seq_len);
    if (as_json) {
        nlohmann::json j{{"tokens", p.tokens}, {"sequences", p.sequences},
                         {"seq_len", seq_len}, {"compute_flops", compute}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "B_opt at C = " << fmt6(compute) << " FLOPs: " << fmt6(p.tokens)
                  << " tokens = " << fmt6(p.sequences) << " sequences\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperparameter scaling-law toolkit for training-run records"};
    app.require_subcommand(1);

    CliConfig cfg;
    std::string config_path;
    std::uint64_t seed_flag = 0;
    app.add_option("--config", config_path, "JSON config file (flags win on conflict)");
    auto* seed_opt = app.add_option("--seed", seed_flag,
                                    "RNG seed (also env POWERLINES_SEED)");
    app.add_option("--proxy-width", cfg.proxy_width, "proxy model width for muP");
    app.add_option("--bootstrap-iters", cfg.bootstrap_iters, "bootstrap refits");
    app.add_option("--bootstrap-frac", cfg.bootstrap_frac, "bootstrap subset fraction");

    // fit-tau
    auto* fit_tau = app.add_subcommand("fit-tau", "fit the optimal-timescale power law");
    std::string runs_path, format = "auto", out_path;
    fit_tau->add_option("--runs", runs_path, "run records")->required();
    fit_tau->add_option("--format", format, "csv|jsonl (default: by extension)");
    fit_tau->add_option("--out", out_path, "law JSON output")->required();

    // recommend-lambda
    auto* rec = app.add_subcommand("recommend-lambda",
                                   "weight decay recommendation from a tau law");
    double rl_n = 0, rl_d = 0, rl_batch = 0, rl_eta = 0, rl_eta_base = 0;
    std::int64_t rl_seq_len = 0, rl_width = 0;
    std::string rl_law, rl_bcrit;
    bool rl_json = false;
    rec->add_option("--n", rl_n, "model parameters")->required();
    rec->add_option("--d", rl_d, "training tokens")->required();
    rec->add_option("--batch-seq", rl_batch, "batch size in sequences")->required();
    rec->add_option("--seq-len", rl_seq_len, "sequence length");
    rec->add_option("--eta", rl_eta, "peak learning rate");
    rec->add_option("--eta-base", rl_eta_base, "base muP learning rate");
    rec->add_option("--width", rl_width, "target model width");
    rec->add_option("--tau-law", rl_law, "tau law JSON")->required();
    rec->add_option("--bcrit-law", rl_bcrit, "optional B_crit law for drift warnings");
    rec->add_flag("--json", rl_json, "machine-readable output");

    // fit-bopt
    auto* fb = app.add_subcommand("fit-bopt", "fit the optimal-batch power law in D");
    std::string fb_runs, fb_format = "auto", fb_out;
    std::int64_t fb_min_b = 0;
    fb->add_option("--runs", fb_runs)->required();
    fb->add_option("--format", fb_format, "csv|jsonl");
    fb->add_option("--out", fb_out)->required();
    fb->add_option("--min-b", fb_min_b, "drop batches below this many sequences");

    // fit-bcrit
    auto* fc = app.add_subcommand("fit-bcrit", "fit the critical-batch power law");
    std::string fc_runs, fc_format = "auto", fc_out;
    std::vector<double> fc_targets;
    std::int64_t fc_min_b = 0;
    fc->add_option("--runs", fc_runs)->required();
    fc->add_option("--format", fc_format, "csv|jsonl");
    fc->add_option("--loss-targets", fc_targets, "target losses")->required();
    fc->add_option("--out", fc_out)->required();
    fc->add_option("--min-b", fc_min_b, "drop batches below this many sequences");

    // pareto
    auto* pa = app.add_subcommand("pareto", "time/compute Pareto frontier");
    std::string pa_chin, pa_bcrit, pa_bopt, pa_model = "flops-per-batch", pa_out;
    double pa_loss = 0;
    std::vector<double> pa_grid;
    pa->add_option("--chinchilla", pa_chin, "loss surface JSON")->required();
    pa->add_option("--bcrit-law", pa_bcrit, "B_crit law JSON")->required();
    pa->add_option("--bopt-law", pa_bopt, "optional B_opt law JSON");
    pa->add_option("--loss", pa_loss, "target loss")->required();
    pa->add_option("--time-model", pa_model, "flops-per-batch|steps");
    pa->add_option("--n-grid", pa_grid, "model sizes along the contour")->required();
    pa->add_option("--out", pa_out, "output base path")->required();

    // ema-sim
    auto* em = app.add_subcommand("ema-sim", "EMA coefficient curves across step counts");
    std::vector<std::int64_t> em_steps;
    double em_warmup = 0.10, em_eta = 0.0, em_tau = 0.0;
    std::string em_out;
    em->add_option("--steps", em_steps, "total step counts")->required();
    em->add_option("--warmup-frac", em_warmup, "warmup fraction");
    em->add_option("--eta-peak", em_eta, "peak learning rate")->required();
    em->add_option("--tau", em_tau, "target timescale")->required();
    em->add_option("--out", em_out, "coefficient CSV")->required();

    // synth
    auto* sy = app.add_subcommand("synth", "generate runs from a planted world");
    std::string sy_world, sy_design, sy_out;
    sy->add_option("--world", sy_world, "world spec JSON")->required();
    sy->add_option("--design", sy_design, "design CSV")->required();
    sy->add_option("--out", sy_out, "run CSV output")->required();

    // convert-law
    auto* cv = app.add_subcommand("convert-law", "literature batch-size conversions");
    std::string cv_form;
    double cv_coeff = 0, cv_exp = 0.47, cv_compute = 0;
    std::int64_t cv_seq_len = kDefaultSeqLen;
    bool cv_json = false;
    cv->add_option("--form", cv_form, "zhang|deepseek")->required();
    cv->add_option("--coeff", cv_coeff, "token-unit coefficient (zhang)");
    cv->add_option("--exponent", cv_exp, "exponent (zhang)");
    cv->add_option("--compute", cv_compute, "compute FLOPs (deepseek)");
    cv->add_option("--seq-len", cv_seq_len, "sequence length");
    cv->add_flag("--json", cv_json, "machine-readable output");

    CLI11_PARSE(app, argc, argv);

    const bool seed_given = seed_opt->count() > 0;
    try {
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        if (seed_given) {
            cfg.seed = seed_flag;
        } else if (const char* env = std::getenv("POWERLINES_SEED")) {
            cfg.seed = std::strtoull(env, nullptr, 10);
        }
        validate_config(cfg);

        if (*fit_tau) return cmd_fit_tau(cfg, runs_path, format, out_path);
        if (*rec)
            return cmd_recommend_lambda(cfg, rl_n, rl_d, rl_batch, rl_seq_len, rl_eta,
                                        rl_eta_base, rl_width, rl_law, rl_bcrit, rl_json);
        if (*fb) return cmd_fit_bopt(cfg, fb_runs, fb_format, fb_out, fb_min_b);
        if (*fc) return cmd_fit_bcrit(cfg, fc_runs, fc_format, fc_targets, fc_out, fc_min_b);
        if (*pa)
            return cmd_pareto(cfg, pa_chin, pa_bcrit, pa_bopt, pa_loss, pa_model, pa_grid,
                              pa_out);
        if (*em) return cmd_ema_sim(em_steps, em_warmup, em_eta, em_tau, em_out);
        if (*sy)
            return cmd_synth(sy_world, sy_design, sy_out,
                             seed_given ? std::optional<std::uint64_t>(cfg.seed)
                                        : std::nullopt);
        if (*cv)
            return cmd_convert_law(cv_form, cv_coeff, cv_exp, cv_compute, cv_seq_len,
                                   cv_json);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
