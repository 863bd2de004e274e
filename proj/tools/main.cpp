#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridcausal/commands.hpp"

namespace {

// Exit codes: 0 success, 1 validation error, 2 compute failure.
int dispatch(const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const gridcausal::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gridcausal::MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gridcausal::MalformedCase& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gridcausal::DanglingReference& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gridcausal::NoSlackBus& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "compute failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal discovery and prediction of cascading line outages"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string out_override;
  std::int64_t seed_override = -1;
  app.add_option("--config", config_path, "Run configuration file")->required();
  app.add_option("--out", out_override, "Override output directory");
  app.add_option("--seed", seed_override, "Override the configured seed");

  auto* gen_data = app.add_subcommand("gen-data", "Generate observational anomaly datasets");
  auto* learn = app.add_subcommand("learn", "Learn the per-line causal interaction matrices");
  auto* ground_truth =
      app.add_subcommand("ground-truth", "Enumerate dependent cascade sequences");
  auto* predict = app.add_subcommand("predict", "Predict the next failures for a given sequence");
  auto* cci = app.add_subcommand("cci", "Search for the most costly cascade sequences");
  auto* evaluate = app.add_subcommand("evaluate", "Precision / regret / candidate-count report");
  auto* worst_case = app.add_subcommand("worst-case", "Enumerate all bounded-length sequences");

  std::vector<int> failed_lines;
  double kappa = 25.0;
  predict->add_option("--failed", failed_lines, "Failed lines so far (1-based, ordered)")
      ->required()
      ->delimiter(',');
  predict->add_option("--kappa", kappa, "Prediction budget in percent");
  cci->add_option("--kappa", kappa, "Prediction budget in percent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;  // usage problems are validation errors
  }

  gridcausal::RunConfig config;
  const int load_rc = dispatch([&] { config = gridcausal::load_config_file(config_path); });
  if (load_rc != 0) return load_rc;
  if (!out_override.empty()) config.out_dir = out_override;
  if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);

  if (gen_data->parsed()) return dispatch([&] { gridcausal::cmd_gen_data(config); });
  if (learn->parsed()) return dispatch([&] { gridcausal::cmd_learn(config); });
  if (ground_truth->parsed()) return dispatch([&] { gridcausal::cmd_ground_truth(config); });
  if (predict->parsed())
    return dispatch([&] { gridcausal::cmd_predict(config, failed_lines, kappa); });
  if (cci->parsed()) return dispatch([&] { gridcausal::cmd_cci(config, kappa); });
  if (evaluate->parsed()) return dispatch([&] { gridcausal::cmd_evaluate(config); });
  if (worst_case->parsed()) return dispatch([&] { gridcausal::cmd_worst_case(config); });
  return 1;
}
