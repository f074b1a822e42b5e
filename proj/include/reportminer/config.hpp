#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "reportminer/classifier.hpp"
#include "reportminer/embedding.hpp"

namespace reportminer::config {

// Flat `key = value` pipeline configuration. Precedence: command-line flags
// override file values, which override the defaults below.
struct PipelineConfig {
    std::string reports_path;
    std::string labeled_path;
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    std::string arch = "lstm";
    int min_count = 1;
    int bucket_width = 50;
    embedding::EmbeddingConfig embedding;
    classifier::ClassifierConfig classifier;

    bool operator==(const PipelineConfig&) const = default;
};

PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config_file(const std::filesystem::path& path);

// Serialization is the `--print-config` output; it re-parses to an
// identical config.
std::string serialize(const PipelineConfig& config);

}  // namespace reportminer::config
