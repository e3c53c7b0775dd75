#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgpnas/function_catalog.hpp"

namespace cgpnas {

enum class DataSource { SyntheticMajority, SyntheticNgram, External };

std::string_view source_name(DataSource s);
std::optional<DataSource> parse_source(std::string_view name);

struct DataConfig {
    std::size_t vocab_size = 24;
    std::size_t num_classes = 2;
    std::size_t max_len = 12;
    std::size_t embed_dim = 16;
    std::size_t train_size = 800;
    std::size_t val_size = 400;
    std::size_t batch_size = 8;
    std::size_t epochs = 5;
    double lr = 0.01;
    std::uint64_t seed = 0;
    DataSource source = DataSource::SyntheticNgram;
    /// Forwarded to external evaluators only.
    std::string dataset_name = "synthetic";
    std::string glove_path;

    void validate() const;
    TensorShape input_shape() const { return {batch_size, max_len, embed_dim}; }

    bool operator==(const DataConfig&) const = default;
};

/// Full-scale shape values (sentence length 50, word vectors 300, 50
/// epochs at lr 0.01) with the synthetic n-gram task as the data stand-in.
DataConfig paper_data_config();
DataConfig desk_data_config();

struct Example {
    std::vector<int> tokens;
    int label = 0;
};

struct Dataset {
    std::vector<Example> train;
    std::vector<Example> val;
};

/// Deterministic in cfg.seed. Train and validation sentences are disjoint
/// and labels are balanced round-robin. Throws ConfigError when the
/// vocabulary or sentence length cannot host the task.
Dataset synth_dataset(const DataConfig& cfg);

/// Class owning `token`, or -1 for filler tokens.
int token_owner(int token, const DataConfig& cfg);

/// Bag-of-words reference: the class whose owned tokens occur most often,
/// ties toward the lower class id.
int bag_of_words_predict(std::span<const int> tokens, const DataConfig& cfg);

} // namespace cgpnas
