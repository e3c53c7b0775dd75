#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cgpnas/error.hpp"
#include "cgpnas/external_evaluator.hpp"
#include "cgpnas/runner.hpp"
#include "support.hpp"

using namespace cgpnas;
using namespace cgpnas::testing;

namespace {

double echo_fitness(const Genotype& g, const DataConfig& data) {
    const ArchitectureGraph graph = decode(g, g.catalog(), data.input_shape());
    return static_cast<double>(fnv1a(graph_to_json(graph).dump()) % 1000) / 1000.0;
}

std::vector<Genotype> distinct_batch(std::size_t n, std::uint64_t seed) {
    std::vector<Genotype> out;
    RandomStream rng(seed);
    while (out.size() < n) {
        Genotype g = random_genotype(desk_grid_config(), FunctionCatalog(), rng);
        if (validate(g, g.catalog(), g.config(), desk_ngram().input_shape()).valid()) {
            out.push_back(std::move(g));
        }
    }
    return out;
}

} // namespace

TEST_CASE("request layout") {
    const DataConfig data = desk_ngram();
    const Genotype g = conv_relu_genotype();
    const Json req = make_eval_request("r1", decode(g, g.catalog(), data.input_shape()), data);
    std::vector<std::string> keys;
    for (const auto& item : req.items()) keys.push_back(item.key());
    CHECK(keys == std::vector<std::string>{"protocol_version", "request_id", "graph", "data"});
    CHECK(req["protocol_version"] == "1");
    std::vector<std::string> data_keys;
    for (const auto& item : req["data"].items()) data_keys.push_back(item.key());
    CHECK(data_keys == std::vector<std::string>{"dataset_name", "max_len", "embed_dim", "num_classes",
                                                "epochs", "lr", "seed", "embeddings"});
    CHECK(req["data"]["embeddings"] == "none");
    DataConfig glove = data;
    glove.glove_path = "/data/glove.txt";
    CHECK(make_eval_request("r2", decode(g, g.catalog(), data.input_shape()), glove)["data"]["embeddings"]["glove_path"] ==
          "/data/glove.txt");
}

TEST_CASE("graph JSON survives serialize, parse, re-serialize") {
    RandomStream rng(31);
    for (int i = 0; i < 50; ++i) {
        const Genotype g = random_genotype(GridConfig{}, FunctionCatalog(), rng);
        ArchitectureGraph graph;
        try {
            graph = decode(g, g.catalog(), {8, 50, 300});
        } catch (const DecodeError&) {
            continue;
        }
        const std::string text = graph_to_json(graph).dump();
        const ArchitectureGraph back = graph_from_json(Json::parse(text));
        CHECK(back == graph);
        CHECK(graph_to_json(back).dump() == text);
    }
}

TEST_CASE("out-of-order responses are matched by request_id") {
    const DataConfig data = desk_ngram();
    ExternalEvaluator eval(ECHO_EVALUATOR_PATH, data);
    const auto batch = distinct_batch(4, 5);
    for (int round = 0; round < 3; ++round) {
        const std::vector<double> f = eval.evaluate(batch, static_cast<std::size_t>(round));
        REQUIRE(f.size() == batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            CHECK(f[i] == echo_fitness(batch[i], data));
        }
    }
    CHECK(eval.requests_sent() == 12);
}

TEST_CASE("invalid genotypes score zero without a request") {
    const DataConfig data = desk_ngram();
    ExternalEvaluator eval(ECHO_EVALUATOR_PATH, data);
    std::vector<Genotype> batch = distinct_batch(2, 9);
    batch.insert(batch.begin() + 1, identity_of(batch[0]));  // zero active nodes
    const auto f = eval.evaluate(batch, 0);
    CHECK(f[1] == 0.0);
    CHECK(f[0] == echo_fitness(batch[0], data));
    CHECK(eval.requests_sent() == 2);
}

TEST_CASE("error responses score zero with a warning") {
    DataConfig data = desk_ngram();
    data.dataset_name = "fail";
    std::vector<std::string> warnings;
    ExternalEvaluator eval(ECHO_EVALUATOR_PATH, data,
                           [&warnings](const std::string& w) { warnings.push_back(w); });
    const auto f = eval.evaluate(distinct_batch(3, 2), 0);
    CHECK(f == std::vector<double>{0.0, 0.0, 0.0});
    REQUIRE(warnings.size() == 3);
    CHECK(warnings[0].find("training failed") != std::string::npos);
}

TEST_CASE("a peer that exits early aborts the batch") {
    ExternalEvaluator eval("exit 0", desk_ngram());
    CHECK_THROWS_AS(eval.evaluate(distinct_batch(1, 3), 0), std::runtime_error);
}

TEST_CASE("a full desk search runs against the echo peer") {
    const auto dir = std::filesystem::temp_directory_path() / "cgpnas_external_search";
    std::filesystem::remove_all(dir);
    RunConfig cfg = preset_config(Preset::Desk);
    cfg.set_seed(kDeskSeed);
    cfg.external_command = ECHO_EVALUATOR_PATH;
    cfg.output_dir = dir;
    const RunOutcome out = run_search(cfg);
    CHECK(out.status == RunStatus::Completed);
    CHECK(out.generation == 30);
    std::ifstream history(dir / artifact::kHistory);
    std::size_t lines = 0;
    for (std::string line; std::getline(history, line);) ++lines;
    CHECK(lines == 30);
    REQUIRE(out.best);
    CHECK(out.best_fitness == echo_fitness(*out.best, cfg.data));
    std::filesystem::remove_all(dir);
}
