// autorecon: simulate datasets, train the autoencoder, reconstruct missing
// features, evaluate results and verify gradients.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include "autorecon/commands.hpp"
#include "autorecon/error.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace autorecon;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

PipelineConfig config_or_default(const std::string& path) {
    return path.empty() ? PipelineConfig{} : load_pipeline_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    retain_freed_memory();
    CLI::App app{"Reconstruct completely missing variables of a multivariate time series with a frozen "
                 "LSTM autoencoder"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate the six training datasets and the test dataset");
    std::string sim_config;
    std::string sim_out = "data";
    std::optional<std::uint64_t> sim_seed;
    sim->add_option("--config", sim_config, "JSON configuration file (simulation section)")->check(CLI::ExistingFile);
    sim->add_option("--out", sim_out, "Output directory")->capture_default_str();
    sim->add_option("--seed", sim_seed, "Override the waveform seed");

    // train
    auto* trn = app.add_subcommand("train", "Train the autoencoder on every training dataset");
    std::string trn_data = "data";
    std::string trn_config;
    std::string trn_model = "model.json";
    std::string trn_history;
    std::optional<int> trn_epochs;
    std::optional<double> trn_lr;
    std::optional<std::uint64_t> trn_seed;
    std::optional<Index> trn_hidden;
    std::optional<Index> trn_latent;
    bool trn_quiet = false;
    trn->add_option("--data", trn_data, "Directory with manifest.json or train_*.csv")->capture_default_str();
    trn->add_option("--config", trn_config, "JSON configuration file (network and training sections)")
        ->check(CLI::ExistingFile);
    trn->add_option("--model", trn_model, "Output model file")->capture_default_str();
    trn->add_option("--history", trn_history, "Loss history CSV (default: <model>.loss.csv)");
    trn->add_option("--epochs", trn_epochs, "Training epochs (default 1000)");
    trn->add_option("--lr", trn_lr, "Adam learning rate (default 0.001)");
    trn->add_option("--seed", trn_seed, "Parameter initialization seed");
    trn->add_option("--hidden", trn_hidden, "LSTM hidden width (default 16)");
    trn->add_option("--latent", trn_latent, "Latent width (default 2)");
    trn->add_flag("--quiet", trn_quiet, "Suppress per-epoch progress");

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "Reconstruct missing features of a dataset");
    std::string rec_model = "model.json";
    std::string rec_data;
    std::string rec_missing;
    std::string rec_config;
    std::string rec_out = "result.csv";
    std::string rec_history;
    std::string rec_weights;
    std::optional<int> rec_epochs;
    std::optional<double> rec_lr;
    rec->add_option("--model", rec_model, "Trained model file")->capture_default_str()->check(CLI::ExistingFile);
    rec->add_option("--data", rec_data, "Application dataset CSV")->required()->check(CLI::ExistingFile);
    rec->add_option("--missing", rec_missing, "Missing feature names, comma separated")->required();
    rec->add_option("--config", rec_config, "JSON configuration file (reconstruction section)")
        ->check(CLI::ExistingFile);
    rec->add_option("--out", rec_out, "Result CSV")->capture_default_str();
    rec->add_option("--history", rec_history, "Reduced-loss history CSV");
    rec->add_option("--epochs", rec_epochs, "Epochs (default 300 for one missing feature, 3000 for more)");
    rec->add_option("--lr", rec_lr, "Adam learning rate (default 0.005)");
    rec->add_option("--weights", rec_weights, "Loss weights of available features, e.g. i2=2,u1=1");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Compare a result CSV with ground truth");
    std::string ev_result;
    std::string ev_truth;
    std::string ev_out = "evaluation";
    ev->add_option("--result", ev_result, "Result CSV")->required()->check(CLI::ExistingFile);
    ev->add_option("--truth", ev_truth, "Ground-truth dataset CSV")->required()->check(CLI::ExistingFile);
    ev->add_option("--out", ev_out, "Output directory for report.csv and spectra")->capture_default_str();

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Verify reverse-mode gradients against finite differences");
    std::uint64_t gc_seed = 1;
    int gc_trials = 10;
    gc->add_option("--seed", gc_seed, "Random seed")->capture_default_str();
    gc->add_option("--trials", gc_trials, "Random trials per operation")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (sim->parsed()) {
            SuiteConfig cfg = config_or_default(sim_config).simulation;
            if (sim_seed) {
                cfg.seed = *sim_seed;
            }
            const SimulateReport report = cmd_simulate(cfg, sim_out);
            for (const auto& w : report.warnings) {
                std::cerr << "warning: " << w << '\n';
            }
            for (const auto& f : report.files) {
                std::cout << f.string() << '\n';
            }
            std::cout << report.manifest.string() << '\n';
        } else if (trn->parsed()) {
            TrainConfig cfg = config_or_default(trn_config).training;
            if (trn_epochs) cfg.epochs = *trn_epochs;
            if (trn_lr) cfg.learning_rate = *trn_lr;
            if (trn_seed) cfg.seed = *trn_seed;
            if (trn_hidden) cfg.net.lstm_hidden = *trn_hidden;
            if (trn_latent) cfg.net.latent_dim = *trn_latent;
            const fs::path model_path = trn_model;
            const fs::path history = trn_history.empty() ? fs::path(model_path).replace_extension(".loss.csv")
                                                         : fs::path(trn_history);
            TrainProgress progress;
            if (!trn_quiet) {
                progress = [&](const LossRecord& r) {
                    if (r.epoch % 50 == 0 || r.epoch + 1 == cfg.epochs) {
                        std::fprintf(stderr, "epoch %5d dataset %d loss %.6e\n", r.epoch, r.dataset, r.loss);
                    }
                };
            }
            const TrainResult result = cmd_train(trn_data, cfg, model_path, history, progress);
            std::cout << "model: " << model_path.string() << "\nhistory: " << history.string() << '\n';
            for (std::size_t d = 0; d < result.model.metadata.final_losses.size(); ++d) {
                std::printf("dataset %zu final loss %.6e\n", d, result.model.metadata.final_losses[d]);
            }
        } else if (rec->parsed()) {
            const ReconstructionDefaults defaults = config_or_default(rec_config).reconstruction;
            ReconstructionSpec spec;
            spec.missing = parse_feature_list(rec_missing);
            spec.learning_rate = rec_lr.value_or(defaults.learning_rate);
            spec.init = defaults.init;
            spec.epochs = rec_epochs.value_or(spec.missing.size() > 1 ? defaults.epochs_multi : defaults.epochs_single);
            spec.weights = parse_weights(rec_weights);
            const std::optional<fs::path> history =
                rec_history.empty() ? std::nullopt : std::optional<fs::path>(rec_history);
            const ReconstructionResult result = cmd_reconstruct(rec_model, rec_data, spec, rec_out, history);
            std::printf("epochs %d\ninitial reduced loss %.6e\nfinal reduced loss %.6e\nresult: %s\n",
                        spec.resolved_epochs(), result.initial_loss, result.final_loss, rec_out.c_str());
        } else if (ev->parsed()) {
            const EvaluateReport report = cmd_evaluate(ev_result, ev_truth, ev_out);
            std::printf("%-16s %14s %14s %14s\n", "column", "mse", "rmse", "relative_rmse");
            for (const auto& f : report.features) {
                std::printf("%-16s %14.6e %14.6e %14.6e\n", f.feature.c_str(), f.mse, f.rmse, f.relative_rmse);
            }
            std::cout << "report: " << report.report_csv.string() << '\n';
        } else if (gc->parsed()) {
            const GradcheckSummary summary = run_gradcheck_suite(gc_seed, gc_trials);
            for (const auto& e : summary.entries) {
                std::printf("%s  %-44s max rel err %.3e\n", e.passed ? "PASS" : "FAIL", e.name.c_str(),
                            e.max_relative_error);
            }
            std::printf("%s: worst %.3e (tolerance %.0e) in %.2f s\n", summary.passed() ? "PASS" : "FAIL",
                        summary.worst(), summary.tolerance, summary.seconds);
            return summary.passed() ? 0 : kExitNumerical;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
