#include "cgpnas/dataset.hpp"

#include <algorithm>
#include <set>

#include "cgpnas/error.hpp"
#include "cgpnas/random.hpp"

namespace cgpnas {

std::string_view source_name(DataSource s) {
    switch (s) {
    case DataSource::SyntheticMajority: return "synthetic_majority";
    case DataSource::SyntheticNgram: return "synthetic_ngram";
    case DataSource::External: return "external";
    }
    return "?";
}

std::optional<DataSource> parse_source(std::string_view name) {
    for (DataSource s :
         {DataSource::SyntheticMajority, DataSource::SyntheticNgram, DataSource::External}) {
        if (source_name(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

void DataConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("data." + msg); };
    if (num_classes < 2) fail("num_classes: need at least 2");
    if (vocab_size < num_classes + 2) fail("vocab_size: need at least num_classes + 2");
    if (max_len < 1) fail("max_len: must be positive");
    if (embed_dim < 1) fail("embed_dim: must be positive");
    if (batch_size < 1) fail("batch_size: must be positive");
    if (!(lr > 0.0)) fail("lr: must be positive");
    if (source != DataSource::External) {
        if (train_size < 1) fail("train_size: must be positive");
        if (val_size < 1) fail("val_size: must be positive");
    }
    if (source == DataSource::SyntheticNgram) {
        if (vocab_size < 2 * num_classes + 1) {
            fail("vocab_size: n-gram task needs 2 * num_classes + 1 tokens");
        }
        if (max_len < 2 * num_classes) fail("max_len: n-gram task needs 2 * num_classes positions");
    }
}

DataConfig paper_data_config() {
    DataConfig cfg;
    cfg.vocab_size = 64;
    cfg.max_len = 50;
    cfg.embed_dim = 300;
    cfg.epochs = 50;
    cfg.lr = 0.01;
    cfg.batch_size = 8;
    return cfg;
}

DataConfig desk_data_config() {
    return DataConfig{};
}

namespace {

std::size_t majority_block(const DataConfig& cfg) {
    return cfg.vocab_size / (cfg.num_classes + 1);
}

std::vector<int> majority_sentence(const DataConfig& cfg, int label, RandomStream& rng) {
    const int classes = static_cast<int>(cfg.num_classes);
    std::vector<int> tokens(cfg.max_len);
    std::vector<int> counts(cfg.num_classes);
    for (;;) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int& t : tokens) {
            t = static_cast<int>(rng.uniform_below(cfg.vocab_size));
            const int owner = token_owner(t, cfg);
            if (owner >= 0) {
                ++counts[static_cast<std::size_t>(owner)];
            }
        }
        // Keep only sentences where `label` is the strict majority class.
        bool ok = true;
        for (int c = 0; c < classes && ok; ++c) {
            if (c != label && counts[static_cast<std::size_t>(c)] >= counts[static_cast<std::size_t>(label)]) {
                ok = false;
            }
        }
        if (ok) {
            return tokens;
        }
    }
}

std::vector<int> ngram_sentence(const DataConfig& cfg, int label, RandomStream& rng) {
    const std::size_t classes = cfg.num_classes;
    const std::size_t fillers = cfg.max_len - 2 * classes;
    const std::size_t filler_vocab = cfg.vocab_size - 2 * classes;
    // Items: 0..classes-1 are marker pairs, -1 is a filler slot.
    std::vector<int> items;
    for (std::size_t c = 0; c < classes; ++c) {
        items.push_back(static_cast<int>(c));
    }
    items.insert(items.end(), fillers, -1);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[rng.uniform_below(i)]);
    }
    std::vector<int> tokens;
    tokens.reserve(cfg.max_len);
    for (int item : items) {
        if (item < 0) {
            tokens.push_back(static_cast<int>(2 * classes + rng.uniform_below(filler_vocab)));
            continue;
        }
        const int first = 2 * item;
        const int second = 2 * item + 1;
        // Only the label's pair appears in forward order.
        if (item == label) {
            tokens.push_back(first);
            tokens.push_back(second);
        } else {
            tokens.push_back(second);
            tokens.push_back(first);
        }
    }
    return tokens;
}

} // namespace

int token_owner(int token, const DataConfig& cfg) {
    if (cfg.source == DataSource::SyntheticNgram) {
        const int owner = token / 2;
        return owner < static_cast<int>(cfg.num_classes) ? owner : -1;
    }
    const auto block = static_cast<int>(majority_block(cfg));
    const int owner = token / block;
    return owner < static_cast<int>(cfg.num_classes) ? owner : -1;
}

int bag_of_words_predict(std::span<const int> tokens, const DataConfig& cfg) {
    std::vector<int> counts(cfg.num_classes);
    for (int t : tokens) {
        const int owner = token_owner(t, cfg);
        if (owner >= 0) {
            ++counts[static_cast<std::size_t>(owner)];
        }
    }
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Dataset synth_dataset(const DataConfig& cfg) {
    cfg.validate();
    if (cfg.source == DataSource::External) {
        throw ConfigError("data.source: external data cannot be synthesized");
    }
    RandomStream rng(mix_seed(cfg.seed, 0xda7a));
    std::set<std::vector<int>> seen;
    auto make = [&](std::size_t count, std::vector<Example>& out) {
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            const int label = static_cast<int>(i % cfg.num_classes);
            for (std::size_t attempt = 0;; ++attempt) {
                auto tokens = cfg.source == DataSource::SyntheticNgram
                                  ? ngram_sentence(cfg, label, rng)
                                  : majority_sentence(cfg, label, rng);
                if (seen.insert(tokens).second) {
                    out.push_back(Example{std::move(tokens), label});
                    break;
                }
                if (attempt > 1000) {
                    throw ConfigError("data: cannot generate enough distinct sentences");
                }
            }
        }
    };
    Dataset ds;
    make(cfg.train_size, ds.train);
    make(cfg.val_size, ds.val);
    return ds;
}

} // namespace cgpnas
