#include "gridcausal/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "gridcausal/util.hpp"
#include "json.hpp"

namespace gridcausal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Timer {
 public:
  void start(const std::string& phase) {
    phase_ = phase;
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    const auto end = std::chrono::steady_clock::now();
    seconds_[phase_] += std::chrono::duration<double>(end - begin_).count();
  }
  json to_json() const {
    json j;
    for (const auto& [phase, s] : seconds_) j[phase] = s;
    return j;
  }

 private:
  std::string phase_;
  std::chrono::steady_clock::time_point begin_;
  std::map<std::string, double> seconds_;
};

std::string format_scale(double scale) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", scale);
  return buf;
}

std::string dataset_csv_path(const RunConfig& config, int line) {
  return config.out_dir + "/datasets/dataset_k" + std::to_string(line + 1) + ".csv";
}
std::string dataset_sidecar_path(const RunConfig& config, int line) {
  return config.out_dir + "/datasets/dataset_k" + std::to_string(line + 1) + ".json";
}

std::string lines_to_display(const std::vector<int>& lines) {
  std::string out = "<";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(lines[i] + 1);
  }
  return out + ">";
}

std::vector<CascadeSequence> truth_top_d(const GroundTruthSet& truth, int d) {
  std::vector<CascadeSequence> sorted = truth.sequences;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const CascadeSequence& a, const CascadeSequence& b) {
                     if (a.cost != b.cost) return a.cost > b.cost;
                     return a.lines < b.lines;
                   });
  if (static_cast<int>(sorted.size()) > d) sorted.resize(d);
  return sorted;
}

std::vector<double> sequence_costs(const std::vector<CascadeSequence>& seqs) {
  std::vector<double> costs;
  costs.reserve(seqs.size());
  for (const auto& s : seqs) costs.push_back(s.cost);
  return costs;
}

}  // namespace

AcOptions ac_options(const RunConfig& config) {
  AcOptions ac;
  ac.enforce_q_limits = config.enforce_q_limits;
  return ac;
}

std::string ground_truth_path(const RunConfig& config, double load_scale) {
  return config.out_dir + "/ground_truth/sequences_ls" + format_scale(load_scale) + ".jsonl";
}

// Reports reference artifacts relative to the output directory so that
// identical runs into different directories stay byte-identical.
std::string out_relative(const RunConfig& config, const std::string& path) {
  if (path.rfind(config.out_dir + "/", 0) == 0) return path.substr(config.out_dir.size() + 1);
  return path;
}

PipelineContext load_context(const RunConfig& config) {
  PipelineContext ctx;
  ctx.grid = parse_case_file(config.case_path);
  ctx.base = solve_ac(ctx.grid, {}, ac_options(config));
  ctx.limits = assign_limits(ctx.grid, ctx.base, config.alpha, config.floor_mw);
  ctx.universe = LineUniverse::non_islanding(ctx.grid);
  return ctx;
}

void cmd_gen_data(const RunConfig& config) {
  validate(config);
  const PipelineContext ctx = load_context(config);
  write_text_file(config.out_dir + "/case.json", to_json(ctx.grid));

  const LoadProfile profile =
      make_load_profile(ctx.grid, config.steps, config.lo, config.hi, config.kernel_window,
                        config.seed);
  const std::string profile_desc = "steps=" + std::to_string(config.steps) +
                                   " lo=" + format_double(config.lo) +
                                   " hi=" + format_double(config.hi) +
                                   " kernel_window=" + std::to_string(config.kernel_window);
  std::cerr << "gen-data: " << ctx.universe.size() << " initiating lines, " << config.steps
            << " profile steps\n";
  const std::vector<FlowState> base_flows =
      profile_base_flows(ctx.grid, profile, ac_options(config), config.threads);

  int ok = 0;
  for (int p = 0; p < ctx.universe.size(); ++p) {
    const int line = ctx.universe.lines[p];
    try {
      const ObservationalDataset data =
          generate_observational(ctx.grid, ctx.limits, line, profile, ctx.universe, &base_flows,
                                 ac_options(config), config.threads);
      save_dataset(dataset_csv_path(config, line), dataset_sidecar_path(config, line), data,
                   ctx.grid.name, ctx.universe, config.seed, profile_desc);
      ++ok;
    } catch (const std::exception& e) {
      std::cerr << "gen-data: line " << line + 1 << " failed: " << e.what() << "\n";
    }
  }
  std::cerr << "gen-data: wrote " << ok << "/" << ctx.universe.size() << " datasets\n";
  if (ok == 0) throw std::runtime_error("no dataset could be generated");
}

void cmd_learn(const RunConfig& config) {
  validate(config);
  const PipelineContext ctx = load_context(config);

  std::vector<ObservationalDataset> datasets;
  std::vector<std::pair<int, std::uint64_t>> hashes;
  for (int line : ctx.universe.lines) {
    const std::string csv = dataset_csv_path(config, line);
    const std::string sidecar = dataset_sidecar_path(config, line);
    if (!fs::exists(csv) || !fs::exists(sidecar))
      throw MissingArtifact("dataset for line " + std::to_string(line + 1) +
                            " not found under " + config.out_dir +
                            "/datasets; run the gen-data command first");
    datasets.push_back(load_dataset(csv, sidecar));
    hashes.emplace_back(line, hash_file(csv));
  }

  IcaOptions options;
  options.tau = config.tau;
  CausalModelSet set =
      learn_model_set(datasets, ctx.universe, config.tau, config.seed, options, config.threads);
  for (const auto& [line, message] : set.failures)
    std::cerr << "learn: line " << line + 1 << " failed: " << message << "\n";
  for (const auto& [line, model] : set.models) {
    if (!model.ica.non_gaussian_ok)
      std::cerr << "learn: line " << line + 1
                << " warning: weak non-Gaussianity (mean excess kurtosis "
                << model.ica.mean_excess_kurtosis << "), support recovery may be unreliable\n";
    if (!model.ica.fixed_point_settled)
      std::cerr << "learn: line " << line + 1
                << " warning: ICA rotation stopped at the iteration cap\n";
  }
  std::cerr << "learn: " << set.models.size() << " models learned, " << set.failures.size()
            << " failures\n";
  if (set.models.empty()) throw std::runtime_error("no causal model could be learned");
  save_model_set(config.out_dir + "/models", set, ctx.grid.name, config.tau, config.seed, hashes);
}

void cmd_ground_truth(const RunConfig& config) {
  validate(config);
  const PipelineContext ctx = load_context(config);
  CfsOptions options;
  options.use_dc = false;
  options.ac = ac_options(config);
  options.threads = config.threads;
  json meta;
  meta["case_id"] = ctx.grid.name;
  meta["horizon"] = config.horizon;
  meta["files"] = json::array();
  for (double scale : config.load_scales) {
    const GroundTruthSet set =
        enumerate_ground_truth(ctx.grid, ctx.limits, ctx.universe, config.horizon, scale, options);
    const std::string path = ground_truth_path(config, scale);
    save_ground_truth(path, set);
    std::cerr << "ground-truth: load scale " << scale << " -> " << set.sequences.size()
              << " sequences\n";
    meta["files"].push_back({{"load_scale", scale},
                             {"path", out_relative(config, path)},
                             {"count", set.sequences.size()},
                             {"hash", to_hex(hash_file(path))}});
  }
  write_text_file(config.out_dir + "/ground_truth/meta.json", meta.dump(2) + "\n");
}

void cmd_predict(const RunConfig& config, const std::vector<int>& failed_1based, double kappa) {
  validate(config);
  if (failed_1based.empty()) throw ConfigError("predict requires --failed line list");
  if (kappa <= 0.0 || kappa > 100.0) throw ConfigError("kappa must lie in (0, 100]");
  const PipelineContext ctx = load_context(config);
  if (!fs::exists(config.out_dir + "/models/manifest.json"))
    throw MissingArtifact("no model set under " + config.out_dir +
                          "/models; run the learn command first");
  const CausalModelSet models = load_model_set(config.out_dir + "/models");

  std::vector<int> failed;
  for (int line : failed_1based) {
    if (line < 1 || line > ctx.grid.n_lines())
      throw ConfigError("failed line " + std::to_string(line) + " out of range");
    failed.push_back(line - 1);
  }
  const PredictionSet prediction = c_path(models, failed, kappa, config.max_path_len);

  json j;
  j["failed"] = json::array();
  for (int line : failed) j["failed"].push_back(line + 1);
  j["kappa"] = kappa;
  j["all_zero"] = prediction.all_zero;
  j["selected"] = json::array();
  for (int line : prediction.selected) j["selected"].push_back(line + 1);
  j["ranked"] = json::array();
  for (const auto& [line, score] : prediction.ranked)
    j["ranked"].push_back({{"line", line + 1}, {"score", score}});
  write_text_file(config.out_dir + "/predict/prediction.json", j.dump(2) + "\n");

  std::cout << "next-failure prediction after " << lines_to_display(failed) << " at kappa "
            << kappa << "%:\n";
  if (prediction.all_zero)
    std::cout << "  (no causal path from the latest failure; empty selection)\n";
  for (int line : prediction.selected) std::cout << "  line " << line + 1 << "\n";
}

void cmd_cci(const RunConfig& config, double kappa) {
  validate(config);
  if (kappa <= 0.0 || kappa > 100.0) throw ConfigError("kappa must lie in (0, 100]");
  const PipelineContext ctx = load_context(config);
  if (!fs::exists(config.out_dir + "/models/manifest.json"))
    throw MissingArtifact("no model set under " + config.out_dir +
                          "/models; run the learn command first");
  const CausalModelSet models = load_model_set(config.out_dir + "/models");

  CciOptions options;
  options.max_path_len = config.max_path_len;
  options.ac = ac_options(config);
  options.threads = config.threads;
  const RankedSequences ranked =
      cci(models, ctx.grid, ctx.limits, kappa, config.horizon, config.top_d, options);

  GroundTruthSet out;
  out.case_id = ctx.grid.name;
  out.horizon = config.horizon;
  out.sequences = ranked.top;
  save_ground_truth(config.out_dir + "/cci/top_sequences.jsonl", out);
  json meta = {{"kappa", kappa},
               {"candidate_count", ranked.candidate_count},
               {"short_of_d", ranked.short_of_d},
               {"top_d", config.top_d}};
  write_text_file(config.out_dir + "/cci/meta.json", meta.dump(2) + "\n");

  std::cout << "cci: " << ranked.candidate_count << " candidates explored at kappa " << kappa
            << "%" << (ranked.short_of_d ? " (fewer than requested top_d)" : "") << "\n";
  for (std::size_t i = 0; i < ranked.top.size() && i < 5; ++i)
    std::cout << "  " << lines_to_display(ranked.top[i].lines) << " cost "
              << ranked.top[i].cost << "\n";
}

void cmd_worst_case(const RunConfig& config) {
  validate(config);
  const PipelineContext ctx = load_context(config);
  CfsOptions options;
  options.use_dc = config.worst_case_dc;
  options.ac = ac_options(config);
  options.threads = config.threads;
  const GroundTruthSet all = enumerate_worst_case(ctx.grid, ctx.limits, ctx.universe,
                                                  config.horizon, 1.0, options);
  const std::vector<CascadeSequence> top = truth_top_d(all, config.top_d);

  GroundTruthSet out;
  out.case_id = ctx.grid.name;
  out.horizon = config.horizon;
  out.sequences = top;
  save_ground_truth(config.out_dir + "/worst_case/top_sequences.jsonl", out);
  json meta = {{"total_count", all.sequences.size()},
               {"top_d", config.top_d},
               {"replay", config.worst_case_dc ? "dc" : "ac"}};
  write_text_file(config.out_dir + "/worst_case/meta.json", meta.dump(2) + "\n");

  std::cout << "worst-case: " << all.sequences.size() << " sequences of length "
            << config.horizon << "\n";
  if (!top.empty())
    std::cout << "  costliest " << lines_to_display(top.front().lines) << " cost "
              << top.front().cost << "\n";
}

double analytic_random_precision(const CascadeSequence& truth, const LineUniverse& universe,
                                 double kappa) {
  const int realized = static_cast<int>(truth.lines.size()) - 1;
  if (realized < 1) throw EmptyTruth("sequence has no predictable stage");
  const int cap = kappa_cap(universe.size(), kappa);
  double sum = 0.0;
  int failed_in_universe = 0;
  for (int m = 1; m <= realized; ++m) {
    if (universe.contains(truth.lines[m - 1])) ++failed_in_universe;
    const int candidates = universe.size() - failed_in_universe;
    if (candidates > 0 && universe.contains(truth.lines[m]))
      sum += std::min(1.0, static_cast<double>(cap) / candidates);
  }
  return sum / realized;
}

EvaluationReport evaluate_models(const PipelineContext& ctx, const CausalModelSet& models,
                                 const InfluenceGraph& ig, const GroundTruthSet& truth,
                                 const RunConfig& config) {
  EvaluationReport report;
  report.truth_sequences = static_cast<int>(truth.sequences.size());

  // Ranked scores do not depend on kappa, so each truth prefix is
  // scored once at kappa = 100 and every budget reuses the ordering.
  struct ScoredSeq {
    const CascadeSequence* seq;
    std::vector<std::vector<std::pair<int, double>>> causal_ranked;  // per stage
    std::vector<std::vector<std::pair<int, double>>> ig_ranked;
    std::vector<bool> causal_all_zero;
    std::vector<bool> ig_all_zero;
  };
  std::vector<const CascadeSequence*> scored_seqs;
  for (const auto& seq : truth.sequences)
    if (seq.lines.size() >= 2) scored_seqs.push_back(&seq);
  report.truth_scored = static_cast<int>(scored_seqs.size());

  std::vector<ScoredSeq> scored(scored_seqs.size());
  parallel_for(
      static_cast<int>(scored_seqs.size()),
      [&](int i) {
        ScoredSeq& s = scored[i];
        s.seq = scored_seqs[i];
        const int realized = static_cast<int>(s.seq->lines.size()) - 1;
        for (int m = 1; m <= realized; ++m) {
          const std::vector<int> prefix(s.seq->lines.begin(), s.seq->lines.begin() + m);
          try {
            PredictionSet p = c_path(models, prefix, 100.0, config.max_path_len);
            s.causal_ranked.push_back(std::move(p.ranked));
            s.causal_all_zero.push_back(p.all_zero);
          } catch (const UnknownInitiator&) {
            s.causal_ranked.emplace_back();
            s.causal_all_zero.push_back(true);
          }
          PredictionSet p = ig_predict(ig, prefix, 100.0);
          s.ig_ranked.push_back(std::move(p.ranked));
          s.ig_all_zero.push_back(p.all_zero);
        }
      },
      config.threads);

  auto precision_at = [&](const std::vector<std::vector<std::pair<int, double>>>& ranked_stages,
                          const std::vector<bool>& all_zero, const CascadeSequence& seq,
                          int cap) {
    const int realized = static_cast<int>(seq.lines.size()) - 1;
    int hits = 0;
    for (int m = 0; m < realized; ++m) {
      if (all_zero[m]) continue;
      const auto& ranked = ranked_stages[m];
      const int take = std::min<int>(cap, static_cast<int>(ranked.size()));
      for (int r = 0; r < take; ++r) {
        if (ranked[r].second <= 0.0) break;
        if (ranked[r].first == seq.lines[m + 1]) {
          ++hits;
          break;
        }
      }
    }
    return static_cast<double>(hits) / realized;
  };

  const std::vector<CascadeSequence> top_truth = truth_top_d(truth, config.top_d);
  const std::vector<double> top_truth_costs = sequence_costs(top_truth);
  for (double c : top_truth_costs) report.truth_top_cost_sum += c;

  for (double kappa : config.kappas) {
    KappaEvaluation eval;
    eval.kappa = kappa;
    const int cap = kappa_cap(ctx.universe.size(), kappa);
    eval.candidate_bound = static_cast<long long>(ctx.universe.size()) *
                           static_cast<long long>(std::pow(cap, config.horizon - 1));

    double sum_causal = 0.0, sum_ig = 0.0, sum_random = 0.0;
    for (const auto& s : scored) {
      sum_causal += precision_at(s.causal_ranked, s.causal_all_zero, *s.seq, cap);
      sum_ig += precision_at(s.ig_ranked, s.ig_all_zero, *s.seq, cap);
      sum_random += analytic_random_precision(*s.seq, ctx.universe, kappa);
    }
    const double denom = std::max<std::size_t>(scored.size(), 1);
    eval.precision_causal = sum_causal / denom;
    eval.precision_ig = sum_ig / denom;
    eval.precision_random = sum_random / denom;

    CciOptions options;
    options.max_path_len = config.max_path_len;
    options.ac = ac_options(config);
    options.threads = config.threads;
    const RankedSequences causal =
        cci(models, ctx.grid, ctx.limits, kappa, config.horizon, config.top_d, options);
    const RankedSequences graph =
        ig_cci(ig, ctx.grid, ctx.limits, kappa, config.horizon, config.top_d, options);
    eval.candidates_causal = causal.candidate_count;
    eval.candidates_ig = graph.candidate_count;
    eval.regret_causal = regret(sequence_costs(causal.top), top_truth_costs);
    eval.regret_ig = regret(sequence_costs(graph.top), top_truth_costs);
    if (!causal.top.empty()) {
      eval.top_causal_lines = causal.top.front().lines;
      eval.top_causal_cost = causal.top.front().cost;
    }
    if (!graph.top.empty()) {
      eval.top_ig_lines = graph.top.front().lines;
      eval.top_ig_cost = graph.top.front().cost;
    }
    report.per_kappa.push_back(std::move(eval));
  }
  return report;
}

void cmd_evaluate(const RunConfig& config) {
  validate(config);
  Timer timer;
  timer.start("load_context");
  const PipelineContext ctx = load_context(config);
  timer.stop();

  const std::string truth_path = ground_truth_path(config, config.load_scales.front());
  if (!fs::exists(truth_path))
    throw MissingArtifact("ground truth " + truth_path +
                          " not found; run the ground-truth command first");
  if (!fs::exists(config.out_dir + "/models/manifest.json"))
    throw MissingArtifact("no model set under " + config.out_dir +
                          "/models; run the learn command first");

  timer.start("load_artifacts");
  const GroundTruthSet truth = load_ground_truth(truth_path);
  const CausalModelSet models = load_model_set(config.out_dir + "/models");
  if (models.universe.lines != ctx.universe.lines)
    throw ConfigError("model universe does not match the case; re-run gen-data and learn");
  timer.stop();

  timer.start("train_ig");
  const GroundTruthSet ig_training = sample_stochastic_cascades(
      ctx.grid, ctx.limits, ctx.universe, config.horizon, config.ig_sequences, config.seed);
  const InfluenceGraph ig = train_ig(ig_training, ctx.universe);
  save_influence_graph(config.out_dir + "/ig", ig, ctx.grid.name, config.ig_sequences,
                       config.seed);
  timer.stop();

  timer.start("evaluate");
  const EvaluationReport report = evaluate_models(ctx, models, ig, truth, config);
  timer.stop();

  // Plot-ready CSVs plus a JSON report tied to the input artifacts.
  std::string precision_csv = "kappa,causal,ig,random\n";
  std::string regret_csv = "kappa,causal,ig\n";
  std::string candidates_csv = "kappa,bound,causal,ig\n";
  std::string worst_csv = "kappa,model,sequence,cost\n";
  for (const auto& e : report.per_kappa) {
    precision_csv += format_double(e.kappa) + "," + format_double(e.precision_causal) + "," +
                     format_double(e.precision_ig) + "," + format_double(e.precision_random) +
                     "\n";
    regret_csv += format_double(e.kappa) + "," + format_double(e.regret_causal) + "," +
                  format_double(e.regret_ig) + "\n";
    candidates_csv += format_double(e.kappa) + "," + std::to_string(e.candidate_bound) + "," +
                      std::to_string(e.candidates_causal) + "," +
                      std::to_string(e.candidates_ig) + "\n";
    worst_csv += format_double(e.kappa) + ",causal," + lines_to_display(e.top_causal_lines) +
                 "," + format_double(e.top_causal_cost) + "\n";
    worst_csv += format_double(e.kappa) + ",ig," + lines_to_display(e.top_ig_lines) + "," +
                 format_double(e.top_ig_cost) + "\n";
  }
  write_text_file(config.out_dir + "/eval/precision_vs_kappa.csv", precision_csv);
  write_text_file(config.out_dir + "/eval/regret_vs_kappa.csv", regret_csv);
  write_text_file(config.out_dir + "/eval/candidates_vs_kappa.csv", candidates_csv);
  write_text_file(config.out_dir + "/eval/worst_case_top.csv", worst_csv);

  json j;
  j["config"] = describe(config);
  j["case_id"] = ctx.grid.name;
  j["truth_sequences"] = report.truth_sequences;
  j["truth_scored"] = report.truth_scored;
  j["truth_top_cost_sum"] = report.truth_top_cost_sum;
  j["artifacts"] = {{"ground_truth",
                     {{"path", out_relative(config, truth_path)},
                      {"hash", to_hex(hash_file(truth_path))}}},
                    {"models_manifest",
                     {{"path", "models/manifest.json"},
                      {"hash", to_hex(hash_file(config.out_dir + "/models/manifest.json"))}}},
                    {"ig_probs",
                     {{"path", "ig/probs.csv"},
                      {"hash", to_hex(hash_file(config.out_dir + "/ig/probs.csv"))}}}};
  j["per_kappa"] = json::array();
  for (const auto& e : report.per_kappa) {
    json row = {{"kappa", e.kappa},
                {"precision_causal", e.precision_causal},
                {"precision_ig", e.precision_ig},
                {"precision_random", e.precision_random},
                {"regret_causal", e.regret_causal},
                {"regret_ig", e.regret_ig},
                {"candidates_causal", e.candidates_causal},
                {"candidates_ig", e.candidates_ig},
                {"candidate_bound", e.candidate_bound}};
    j["per_kappa"].push_back(row);
  }
  write_text_file(config.out_dir + "/eval/report.json", j.dump(2) + "\n");
  write_text_file(config.out_dir + "/eval/timings.json", timer.to_json().dump(2) + "\n");

  std::cout << "kappa  precision(causal/ig/random)  regret(causal/ig)  |C|(causal/ig)\n";
  for (const auto& e : report.per_kappa) {
    std::printf("%5.1f  %.4f / %.4f / %.4f     %.4f / %.4f     %d / %d\n", e.kappa,
                e.precision_causal, e.precision_ig, e.precision_random, e.regret_causal,
                e.regret_ig, e.candidates_causal, e.candidates_ig);
  }
}

}  // namespace gridcausal
