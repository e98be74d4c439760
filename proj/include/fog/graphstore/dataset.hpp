#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fog/graphstore/graph.hpp"
#include "json.hpp"

namespace fog {

enum class TaskKind { node_class, graph_class, graph_regress, edge_class };

std::string to_string(TaskKind kind);
TaskKind task_from_string(const std::string& name);
std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Malformed dataset file. `line` is 1-based.
class DatasetFormatError : public std::runtime_error {
public:
    DatasetFormatError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct FeatureSpec {
    FeatureKind kind = FeatureKind::none;
    std::size_t vocab = 0;  // categorical
    std::size_t width = 0;  // continuous
};

struct DatasetSplit {
    std::string generator;
    std::uint64_t seed = 0;
    TaskKind task = TaskKind::node_class;
    FeatureSpec node_features;
    FeatureSpec edge_features;
    std::size_t n_classes = 0;  // 0 for regression
    nlohmann::ordered_json params = nlohmann::ordered_json::object();

    std::vector<Graph> train;
    std::vector<Graph> val;
    std::vector<Graph> test;

    std::size_t size() const noexcept { return train.size() + val.size() + test.size(); }
};

/// One header object then one graph object per line.
void save_dataset(const DatasetSplit& split, const std::filesystem::path& path);
std::string dataset_to_string(const DatasetSplit& split);

/// Parses and re-validates every graph; throws DatasetFormatError with the
/// offending line.
DatasetSplit load_dataset(const std::filesystem::path& path);
DatasetSplit dataset_from_string(const std::string& text);

}  // namespace fog
