#include "autorecon/io.hpp"

#include "autorecon/error.hpp"

#include "json.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace autorecon {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ValidationError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw ValidationError("failed writing '" + path.string() + "'");
    }
}

std::string dataset_to_csv(const TimeSeriesSet& data) {
    std::string out = "time_s";
    for (const auto& name : data.feature_names) {
        out += ',' + name;
    }
    out += '\n';
    for (Index r = 0; r < data.length(); ++r) {
        out += format_double(data.t0 + static_cast<double>(r) * data.dt);
        for (Index c = 0; c < data.n_features(); ++c) {
            out += ',' + format_double(data.values(r, c));
        }
        out += '\n';
    }
    return out;
}

void write_dataset_csv(const std::filesystem::path& path, const TimeSeriesSet& data) {
    write_text_file(path, dataset_to_csv(data));
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) {
        parts.push_back(cur);
    }
    if (!line.empty() && line.back() == sep) {
        parts.emplace_back();
    }
    return parts;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, const std::string& origin, std::size_t line) {
    const std::string s = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ValidationError(origin + ":" + std::to_string(line) + ": invalid number '" + s + "'");
    }
    return v;
}

}  // namespace

TimeSeriesSet parse_dataset_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(origin + ": empty file");
    }
    std::vector<std::string> header = split(trim(line), ',');
    for (auto& h : header) {
        h = trim(h);
    }
    if (header.size() < 2 || header.front() != "time_s") {
        throw ValidationError(origin + ": header must start with time_s followed by feature names");
    }

    std::vector<double> times;
    std::vector<double> cells;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto parts = split(trim(line), ',');
        if (parts.size() != header.size()) {
            throw ValidationError(origin + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " + std::to_string(parts.size()));
        }
        times.push_back(parse_number(parts[0], origin, line_no));
        for (std::size_t c = 1; c < parts.size(); ++c) {
            cells.push_back(parse_number(parts[c], origin, line_no));
        }
    }
    if (times.size() < 2) {
        throw ValidationError(origin + ": at least two samples required");
    }

    TimeSeriesSet set;
    set.feature_names.assign(header.begin() + 1, header.end());
    set.t0 = times.front();
    set.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(set.dt > 0.0)) {
        throw ValidationError(origin + ": time column must be strictly increasing");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double step = times[k] - times[k - 1];
        if (!(step > 0.0)) {
            throw ValidationError(origin + ": time column not strictly increasing at row " + std::to_string(k + 1));
        }
        const double expected = set.t0 + static_cast<double>(k) * set.dt;
        const double scale = std::max(std::abs(expected), set.dt);
        if (std::abs(times[k] - expected) > 1e-9 * scale) {
            throw ValidationError(origin + ": time column not equidistant at row " + std::to_string(k + 1));
        }
    }
    const Index cols = static_cast<Index>(set.feature_names.size());
    set.values = Eigen::Map<const Tensor>(cells.data(), static_cast<Index>(times.size()), cols);
    set.validate();
    return set;
}

TimeSeriesSet read_dataset_csv(const std::filesystem::path& path) {
    return parse_dataset_csv(read_text_file(path), path.string());
}

namespace {

json tensor_entry(const std::string& name, const Tensor& t) {
    return {{"name", name},
            {"shape", {t.rows(), t.cols()}},
            {"values", std::vector<double>(t.data(), t.data() + t.size())}};
}

std::vector<double> row_vector(const RowVectorX<double>& v) { return {v.data(), v.data() + v.size()}; }

RowVectorX<double> to_row(const std::vector<double>& v) {
    return Eigen::Map<const RowVectorX<double>>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
    json params = json::array();
    for_each_parameter(model.params, [&](const std::string& name, const Tensor& t) {
        params.push_back(tensor_entry(name, t));
    });
    json doc = {
        {"format", "autorecon-model"},
        {"version", kModelFormatVersion},
        {"config",
         {{"n_features", model.config.n_features},
          {"seq_len", model.config.seq_len},
          {"lstm_hidden", model.config.lstm_hidden},
          {"latent_dim", model.config.latent_dim}}},
        {"features", model.scaler.feature_names},
        {"scaler",
         {{"min", row_vector(model.scaler.min)},
          {"max", row_vector(model.scaler.max)},
          {"constant", model.scaler.constant}}},
        {"parameters", params},
        {"training",
         {{"seed", model.metadata.seed},
          {"epochs", model.metadata.epochs},
          {"learning_rate", model.metadata.learning_rate},
          {"final_losses", model.metadata.final_losses}}},
    };
    return doc.dump(1) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "autorecon-model") {
            throw ValidationError("not an autorecon model file");
        }
        const int version = doc.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw ValidationError("unsupported model format version " + std::to_string(version) + " (expected " +
                                  std::to_string(kModelFormatVersion) + ")");
        }
        TrainedModel model;
        const json& cfg = doc.at("config");
        model.config.n_features = cfg.at("n_features").get<Index>();
        model.config.seq_len = cfg.at("seq_len").get<Index>();
        model.config.lstm_hidden = cfg.at("lstm_hidden").get<Index>();
        model.config.latent_dim = cfg.at("latent_dim").get<Index>();
        model.config.validate();

        model.scaler.feature_names = doc.at("features").get<std::vector<std::string>>();
        const json& sc = doc.at("scaler");
        model.scaler.min = to_row(sc.at("min").get<std::vector<double>>());
        model.scaler.max = to_row(sc.at("max").get<std::vector<double>>());
        model.scaler.constant = sc.at("constant").get<std::vector<bool>>();
        const auto n = static_cast<std::size_t>(model.config.n_features);
        if (model.scaler.feature_names.size() != n || static_cast<std::size_t>(model.scaler.min.size()) != n ||
            static_cast<std::size_t>(model.scaler.max.size()) != n || model.scaler.constant.size() != n) {
            throw ValidationError("scaler does not match n_features");
        }

        model.params = zero_params(model.config);
        const json& tensors = doc.at("parameters");
        std::size_t k = 0;
        for_each_parameter(model.params, [&](const std::string& name, Tensor& t) {
            if (k >= tensors.size()) {
                throw ValidationError("model file lacks parameter " + name);
            }
            const json& entry = tensors.at(k++);
            if (entry.at("name").get<std::string>() != name) {
                throw ValidationError("expected parameter " + name + ", found " + entry.at("name").get<std::string>());
            }
            const auto shape = entry.at("shape").get<std::vector<Index>>();
            const auto values = entry.at("values").get<std::vector<double>>();
            if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols() ||
                static_cast<Index>(values.size()) != t.size()) {
                throw ValidationError("parameter " + name + " has the wrong shape");
            }
            t = Eigen::Map<const Tensor>(values.data(), t.rows(), t.cols());
        });
        if (k != tensors.size()) {
            throw ValidationError("model file has unexpected extra parameters");
        }

        const json& tr = doc.at("training");
        model.metadata.seed = tr.at("seed").get<std::uint64_t>();
        model.metadata.epochs = tr.at("epochs").get<int>();
        model.metadata.learning_rate = tr.at("learning_rate").get<double>();
        model.metadata.final_losses = tr.at("final_losses").get<std::vector<double>>();
        return model;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
    write_text_file(path, model_to_json(model));
}

TrainedModel load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

std::string loss_history_to_csv(const std::vector<LossRecord>& history) {
    std::string out = "epoch,dataset,loss\n";
    for (const LossRecord& r : history) {
        out += std::to_string(r.epoch) + ',' + std::to_string(r.dataset) + ',' + format_double(r.loss) + '\n';
    }
    return out;
}

std::string reconstruction_to_csv(const ReconstructionResult& result) {
    std::string out = "time_s";
    for (const auto& name : result.missing) {
        out += ',' + name + "_xmiss," + name + "_xhatmiss";
    }
    out += '\n';
    for (Index r = 0; r < result.x_miss.rows(); ++r) {
        out += format_double(result.t0 + static_cast<double>(r) * result.dt);
        for (Index c = 0; c < result.x_miss.cols(); ++c) {
            out += ',' + format_double(result.x_miss(r, c)) + ',' + format_double(result.x_hat_miss(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string reconstruction_history_to_csv(const ReconstructionResult& result) {
    std::string out = "epoch,reduced_loss\n";
    for (std::size_t k = 0; k < result.loss_history.size(); ++k) {
        out += std::to_string(k) + ',' + format_double(result.loss_history[k]) + '\n';
    }
    return out;
}

}  // namespace autorecon
