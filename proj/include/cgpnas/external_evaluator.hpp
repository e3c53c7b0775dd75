#pragma once

#include <cstdio>
#include <functional>
#include <string>
#include <sys/types.h>

#include "cgpnas/dataset.hpp"
#include "cgpnas/evaluator.hpp"
#include "cgpnas/serialization.hpp"

namespace cgpnas {

inline constexpr const char* kProtocolVersion = "1";

/// EvalRequest line for one decoded graph.
Json make_eval_request(const std::string& request_id, const ArchitectureGraph& graph,
                       const DataConfig& data);

/// Spawns `sh -c command` and exchanges line-delimited JSON over its
/// stdin/stdout. Up to a whole batch is in flight at once; responses are
/// matched by request_id in any order. Error responses score 0 and are
/// reported through `warn`.
class ExternalEvaluator : public Evaluator {
public:
    ExternalEvaluator(std::string command, DataConfig data,
                      std::function<void(const std::string&)> warn = {},
                      std::function<void(const FitnessRecord&)> log = {});
    ~ExternalEvaluator() override;
    ExternalEvaluator(const ExternalEvaluator&) = delete;
    ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

    std::vector<double> evaluate(std::span<const Genotype> batch, std::size_t generation) override;

    std::size_t requests_sent() const { return requests_sent_; }

private:
    void send_line(const std::string& line);
    std::string read_line();

    std::string command_;
    DataConfig data_;
    std::function<void(const std::string&)> warn_;
    std::function<void(const FitnessRecord&)> log_;
    pid_t child_ = -1;
    std::FILE* to_child_ = nullptr;
    std::FILE* from_child_ = nullptr;
    std::size_t requests_sent_ = 0;
    std::size_t next_id_ = 0;
};

} // namespace cgpnas
