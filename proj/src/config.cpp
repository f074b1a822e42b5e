#include "reportminer/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace reportminer::config {

namespace {

std::string trim(const std::string& s) {
    auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        auto key = trim(stripped.substr(0, eq));
        auto value = trim(stripped.substr(eq + 1));
        try {
            if (key == "reports") cfg.reports_path = value;
            else if (key == "labeled") cfg.labeled_path = value;
            else if (key == "out") cfg.out_dir = value;
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "arch") cfg.arch = value;
            else if (key == "min_count") cfg.min_count = std::stoi(value);
            else if (key == "bucket_width") cfg.bucket_width = std::stoi(value);
            else if (key == "embedding.window") cfg.embedding.window = std::stoi(value);
            else if (key == "embedding.dim") cfg.embedding.dim = std::stoi(value);
            else if (key == "embedding.negatives") cfg.embedding.negatives = std::stoi(value);
            else if (key == "embedding.batch") cfg.embedding.batch = std::stoi(value);
            else if (key == "embedding.learning_rate") cfg.embedding.learning_rate = std::stod(value);
            else if (key == "embedding.epochs") cfg.embedding.epochs = std::stoi(value);
            else if (key == "embedding.noise_power") cfg.embedding.noise_power = std::stod(value);
            else if (key == "classifier.learning_rate") cfg.classifier.learning_rate = std::stod(value);
            else if (key == "classifier.epochs") cfg.classifier.epochs = std::stoi(value);
            else if (key == "classifier.batch") cfg.classifier.batch = std::stoi(value);
            else if (key == "classifier.fine_tune") cfg.classifier.fine_tune = parse_bool(value, key);
            else {
                throw std::invalid_argument("config: unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: bad value for " + key + ": " + value);
        }
    }
    return cfg;
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string serialize(const PipelineConfig& c) {
    std::ostringstream out;
    out << "reports = " << c.reports_path << '\n';
    out << "labeled = " << c.labeled_path << '\n';
    out << "out = " << c.out_dir << '\n';
    out << "seed = " << c.seed << '\n';
    out << "arch = " << c.arch << '\n';
    out << "min_count = " << c.min_count << '\n';
    out << "bucket_width = " << c.bucket_width << '\n';
    out << "embedding.window = " << c.embedding.window << '\n';
    out << "embedding.dim = " << c.embedding.dim << '\n';
    out << "embedding.negatives = " << c.embedding.negatives << '\n';
    out << "embedding.batch = " << c.embedding.batch << '\n';
    out << "embedding.learning_rate = " << format_double(c.embedding.learning_rate) << '\n';
    out << "embedding.epochs = " << c.embedding.epochs << '\n';
    out << "embedding.noise_power = " << format_double(c.embedding.noise_power) << '\n';
    out << "classifier.learning_rate = " << format_double(c.classifier.learning_rate) << '\n';
    out << "classifier.epochs = " << c.classifier.epochs << '\n';
    out << "classifier.batch = " << c.classifier.batch << '\n';
    out << "classifier.fine_tune = " << (c.classifier.fine_tune ? "true" : "false") << '\n';
    return out.str();
}

}  // namespace reportminer::config
