#include "autorecon/commands.hpp"

#include "autorecon/error.hpp"
#include "autorecon/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <set>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace autorecon {

void retain_freed_memory() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    if (!obj.is_object()) {
        throw ValidationError("config: '" + where + "' must be an object");
    }
    for (const auto& item : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; })) {
            throw ValidationError("config: unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <typename T>
void read_if(const json& obj, const char* key, T& target) {
    if (obj.contains(key)) {
        target = obj.at(key).get<T>();
    }
}

json waveform_json(const WaveformSpec& spec) {
    json terms = json::array();
    for (const auto& term : spec.terms) {
        if (const auto* d = std::get_if<DcTerm>(&term)) {
            terms.push_back({{"type", "dc"}, {"level", d->level}});
        } else if (const auto* s = std::get_if<SineTerm>(&term)) {
            terms.push_back({{"type", "sine"}, {"amplitude", s->amplitude}, {"frequency_hz", s->frequency},
                             {"phase_rad", s->phase}});
        } else {
            const auto& w = std::get<TrapezoidTerm>(term);
            terms.push_back({{"type", "trapezoid"}, {"low", w.low}, {"high", w.high}, {"rise_s", w.rise},
                             {"high_time_s", w.high_time}, {"fall_s", w.fall}, {"period_s", w.period}});
        }
    }
    return terms;
}

json circuit_json(const CircuitParams& p) {
    return {{"r1", p.r1}, {"inductance", p.inductance}, {"c0", p.c0}, {"v0", p.v0}, {"r_load", p.r_load}};
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    PipelineConfig cfg;
    try {
        reject_unknown_keys(doc, {"simulation", "network", "training", "reconstruction"}, "top level");
        if (doc.contains("simulation")) {
            const json& s = doc.at("simulation");
            reject_unknown_keys(s, {"seed", "samples", "dt", "circuit"}, "simulation");
            read_if(s, "seed", cfg.simulation.seed);
            read_if(s, "samples", cfg.simulation.samples);
            read_if(s, "dt", cfg.simulation.dt);
            if (s.contains("circuit")) {
                const json& c = s.at("circuit");
                reject_unknown_keys(c, {"r1", "inductance", "c0", "v0", "r_load"}, "simulation.circuit");
                read_if(c, "r1", cfg.simulation.circuit.r1);
                read_if(c, "inductance", cfg.simulation.circuit.inductance);
                read_if(c, "c0", cfg.simulation.circuit.c0);
                read_if(c, "v0", cfg.simulation.circuit.v0);
                read_if(c, "r_load", cfg.simulation.circuit.r_load);
            }
        }
        if (doc.contains("network")) {
            const json& n = doc.at("network");
            reject_unknown_keys(n, {"seq_len", "lstm_hidden", "latent_dim"}, "network");
            read_if(n, "seq_len", cfg.training.net.seq_len);
            read_if(n, "lstm_hidden", cfg.training.net.lstm_hidden);
            read_if(n, "latent_dim", cfg.training.net.latent_dim);
        }
        if (doc.contains("training")) {
            const json& t = doc.at("training");
            reject_unknown_keys(t, {"epochs", "learning_rate", "seed"}, "training");
            read_if(t, "epochs", cfg.training.epochs);
            read_if(t, "learning_rate", cfg.training.learning_rate);
            read_if(t, "seed", cfg.training.seed);
        }
        if (doc.contains("reconstruction")) {
            const json& r = doc.at("reconstruction");
            reject_unknown_keys(r, {"learning_rate", "epochs_single", "epochs_multi", "init"}, "reconstruction");
            read_if(r, "learning_rate", cfg.reconstruction.learning_rate);
            read_if(r, "epochs_single", cfg.reconstruction.epochs_single);
            read_if(r, "epochs_multi", cfg.reconstruction.epochs_multi);
            if (r.contains("init")) {
                const auto mode = r.at("init").get<std::string>();
                if (mode == "zeros") {
                    cfg.reconstruction.init = InitMode::Zeros;
                } else if (mode == "midpoint") {
                    cfg.reconstruction.init = InitMode::Midpoint;
                } else {
                    throw ValidationError("config: reconstruction.init must be 'zeros' or 'midpoint'");
                }
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    cfg.simulation.circuit.validate();
    if (!(cfg.simulation.dt > 0.0) || cfg.simulation.samples < 2) {
        throw ValidationError("config: simulation needs dt > 0 and samples >= 2");
    }
    NetConfig probe = cfg.training.net;
    probe.n_features = std::max<Index>(probe.n_features, 2);
    probe.validate();
    if (cfg.training.epochs < 0 || !(cfg.training.learning_rate > 0.0)) {
        throw ValidationError("config: training needs epochs >= 0 and learning_rate > 0");
    }
    if (cfg.reconstruction.epochs_single < 1 || cfg.reconstruction.epochs_multi < 1 ||
        !(cfg.reconstruction.learning_rate > 0.0)) {
        throw ValidationError("config: reconstruction needs epochs >= 1 and learning_rate > 0");
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) { return parse_pipeline_config(read_text_file(path)); }

SimulateReport cmd_simulate(const SuiteConfig& config, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw ValidationError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    }
    const SimSuite suite = generate_suite(config);

    SimulateReport report;
    json datasets = json::array();
    auto emit = [&](const SuiteEntry& e, const char* role) {
        const fs::path file = out_dir / (e.name + ".csv");
        write_dataset_csv(file, e.output.series);
        report.files.push_back(file);
        for (const auto& w : e.output.warnings) {
            report.warnings.push_back(e.name + ": " + w);
        }
        datasets.push_back({{"file", e.name + ".csv"},
                            {"role", role},
                            {"description", e.description},
                            {"waveform", waveform_json(e.source)}});
    };
    for (const auto& e : suite.training) {
        emit(e, "training");
    }
    for (const auto& e : suite.test) {
        emit(e, "test");
    }
    const json manifest = {{"seed", config.seed},
                           {"samples", config.samples},
                           {"dt", config.dt},
                           {"circuit", circuit_json(config.circuit)},
                           {"features", circuit_feature_names()},
                           {"datasets", datasets}};
    report.manifest = out_dir / "manifest.json";
    write_text_file(report.manifest, manifest.dump(2) + "\n");
    return report;
}

std::vector<TimeSeriesSet> load_training_sets(const fs::path& data_dir) {
    std::vector<fs::path> files;
    const fs::path manifest = data_dir / "manifest.json";
    if (fs::exists(manifest)) {
        try {
            const json doc = json::parse(read_text_file(manifest));
            for (const json& entry : doc.at("datasets")) {
                if (entry.at("role").get<std::string>() == "training") {
                    files.push_back(data_dir / entry.at("file").get<std::string>());
                }
            }
        } catch (const json::exception& e) {
            throw ValidationError("malformed manifest '" + manifest.string() + "': " + e.what());
        }
    } else if (fs::is_directory(data_dir)) {
        for (const auto& entry : fs::directory_iterator(data_dir)) {
            const std::string name = entry.path().filename().string();
            if (entry.is_regular_file() && name.rfind("train_", 0) == 0 && entry.path().extension() == ".csv") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    }
    if (files.empty()) {
        throw ValidationError("no training datasets found in '" + data_dir.string() + "'");
    }
    std::vector<TimeSeriesSet> sets;
    for (const auto& f : files) {
        sets.push_back(read_dataset_csv(f));
    }
    return sets;
}

TrainResult cmd_train(const fs::path& data_dir, const TrainConfig& config, const fs::path& model_path,
                      const fs::path& history_path, const TrainProgress& progress) {
    const std::vector<TimeSeriesSet> sets = load_training_sets(data_dir);
    TrainResult result = train(sets, config, progress);
    save_model(model_path, result.model);
    write_text_file(history_path, loss_history_to_csv(result.history));
    return result;
}

std::vector<std::string> parse_feature_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : text + ",") {
        if (ch == ',') {
            if (cur.empty()) {
                throw ValidationError("empty feature name in '" + text + "'");
            }
            out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    return out;
}

std::map<std::string, double> parse_weights(const std::string& text) {
    std::map<std::string, double> out;
    if (text.empty()) {
        return out;
    }
    for (const std::string& item : parse_feature_list(text)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw ValidationError("weight '" + item + "' must look like feature=value");
        }
        std::size_t used = 0;
        double w = 0.0;
        try {
            w = std::stod(item.substr(eq + 1), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() - eq - 1) {
            throw ValidationError("weight '" + item + "' has an invalid value");
        }
        out[item.substr(0, eq)] = w;
    }
    return out;
}

ReconstructionResult cmd_reconstruct(const fs::path& model_path, const fs::path& dataset_path,
                                     const ReconstructionSpec& spec, const fs::path& out_path,
                                     const std::optional<fs::path>& history_path) {
    const TrainedModel model = load_model(model_path);
    const TimeSeriesSet data = read_dataset_csv(dataset_path);
    ReconstructionResult result = reconstruct(model, data, spec);
    write_text_file(out_path, reconstruction_to_csv(result));
    if (history_path) {
        write_text_file(*history_path, reconstruction_history_to_csv(result));
    }
    return result;
}

std::string spectrum_to_csv(const Spectrum& spectrum) {
    std::string out = "frequency_hz,magnitude\n";
    for (std::size_t k = 0; k < spectrum.magnitude.size(); ++k) {
        out += format_double(spectrum.frequency_hz[k]) + ',' + format_double(spectrum.magnitude[k]) + '\n';
    }
    return out;
}

EvaluateReport cmd_evaluate(const fs::path& result_path, const fs::path& truth_path, const fs::path& out_dir) {
    const TimeSeriesSet result = read_dataset_csv(result_path);
    const TimeSeriesSet truth = read_dataset_csv(truth_path);
    if (result.length() != truth.length()) {
        throw ValidationError("result has " + std::to_string(result.length()) + " samples, truth has " +
                              std::to_string(truth.length()));
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw ValidationError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    }

    auto base_feature = [](const std::string& column) {
        for (const std::string suffix : {"_xhatmiss", "_xmiss"}) {
            if (column.size() > suffix.size() &&
                column.compare(column.size() - suffix.size(), suffix.size(), suffix) == 0) {
                return column.substr(0, column.size() - suffix.size());
            }
        }
        return column;
    };
    auto column_span = [](const TimeSeriesSet& s, Index j, std::vector<double>& storage) {
        storage.resize(static_cast<std::size_t>(s.length()));
        for (Index r = 0; r < s.length(); ++r) {
            storage[static_cast<std::size_t>(r)] = s.values(r, j);
        }
        return std::span<const double>(storage);
    };

    EvaluateReport report;
    std::string csv = "column,feature,mse,rmse,relative_rmse\n";
    std::set<std::string> truth_features;
    std::vector<double> est_buf, ref_buf;
    for (Index j = 0; j < result.n_features(); ++j) {
        const std::string& column = result.feature_names[static_cast<std::size_t>(j)];
        const std::string feature = base_feature(column);
        if (!truth.has_feature(feature)) {
            throw ValidationError("truth file has no column '" + feature + "' for result column '" + column + "'");
        }
        const auto ref = column_span(truth, truth.index_of(feature), ref_buf);
        const auto est = column_span(result, j, est_buf);
        FeatureReport fr = compare_series(column, ref, est);
        fr.spectrum = amplitude_spectrum(est, result.dt);
        csv += column + ',' + feature + ',' + format_double(fr.mse) + ',' + format_double(fr.rmse) + ',' +
               format_double(fr.relative_rmse) + '\n';
        const fs::path spec_path = out_dir / ("spectrum_" + column + ".csv");
        write_text_file(spec_path, spectrum_to_csv(fr.spectrum));
        report.spectra.push_back(spec_path);
        report.features.push_back(std::move(fr));

        if (truth_features.insert(feature).second && feature != column) {
            const fs::path truth_spec = out_dir / ("spectrum_truth_" + feature + ".csv");
            write_text_file(truth_spec, spectrum_to_csv(amplitude_spectrum(ref, truth.dt)));
            report.spectra.push_back(truth_spec);
        }
    }
    report.report_csv = out_dir / "report.csv";
    write_text_file(report.report_csv, csv);
    return report;
}

}  // namespace autorecon
