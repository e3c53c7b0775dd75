#include "cgpnas/external_evaluator.hpp"

#include <chrono>
#include <csignal>
#include <map>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

#include "cgpnas/error.hpp"

namespace cgpnas {

Json make_eval_request(const std::string& request_id, const ArchitectureGraph& graph,
                       const DataConfig& data) {
    Json d;
    d["dataset_name"] = data.dataset_name;
    d["max_len"] = data.max_len;
    d["embed_dim"] = data.embed_dim;
    d["num_classes"] = data.num_classes;
    d["epochs"] = data.epochs;
    d["lr"] = data.lr;
    d["seed"] = data.seed;
    if (data.glove_path.empty()) {
        d["embeddings"] = "none";
    } else {
        d["embeddings"] = Json{{"glove_path", data.glove_path}};
    }
    Json j;
    j["protocol_version"] = kProtocolVersion;
    j["request_id"] = request_id;
    j["graph"] = graph_to_json(graph);
    j["data"] = std::move(d);
    return j;
}

ExternalEvaluator::ExternalEvaluator(std::string command, DataConfig data,
                                     std::function<void(const std::string&)> warn,
                                     std::function<void(const FitnessRecord&)> log)
    : command_(std::move(command)), data_(std::move(data)), warn_(std::move(warn)),
      log_(std::move(log)) {
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
        throw std::runtime_error("external evaluator: pipe failed");
    }
    child_ = fork();
    if (child_ < 0) {
        throw std::runtime_error("external evaluator: fork failed");
    }
    if (child_ == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = fdopen(in_pipe[1], "w");
    from_child_ = fdopen(out_pipe[0], "r");
}

ExternalEvaluator::~ExternalEvaluator() {
    if (to_child_) std::fclose(to_child_);
    if (from_child_) std::fclose(from_child_);
    if (child_ > 0) {
        int status = 0;
        waitpid(child_, &status, 0);
    }
}

void ExternalEvaluator::send_line(const std::string& line) {
    if (std::fputs(line.c_str(), to_child_) < 0 || std::fputc('\n', to_child_) == EOF ||
        std::fflush(to_child_) != 0) {
        throw std::runtime_error("external evaluator: write failed (process exited?)");
    }
}

std::string ExternalEvaluator::read_line() {
    std::string line;
    int ch;
    while ((ch = std::fgetc(from_child_)) != EOF) {
        if (ch == '\n') {
            return line;
        }
        line.push_back(static_cast<char>(ch));
    }
    throw std::runtime_error("external evaluator: closed its output before answering");
}

std::vector<double> ExternalEvaluator::evaluate(std::span<const Genotype> batch,
                                                std::size_t generation) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    std::vector<double> fitness(batch.size(), 0.0);
    std::vector<std::uint64_t> hashes(batch.size());
    std::map<std::string, std::size_t> pending;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Genotype& g = batch[i];
        hashes[i] = phenotype_hash(g);
        const ValidityReport report = validate(g, g.catalog(), g.config(), data_.input_shape());
        if (!report.valid()) {
            if (log_) log_({generation, hashes[i], 0.0, 0.0, false, true, false});
            continue;
        }
        const ArchitectureGraph graph = decode(g, g.catalog(), data_.input_shape());
        const std::string id = "g" + std::to_string(generation) + "-" + std::to_string(next_id_++);
        send_line(make_eval_request(id, graph, data_).dump());
        ++requests_sent_;
        pending.emplace(id, i);
    }
    while (!pending.empty()) {
        const std::string line = read_line();
        Json response;
        try {
            response = Json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            if (warn_) warn_("external evaluator: unparsable response line ignored");
            continue;
        }
        const std::string id = response.value("request_id", std::string());
        const auto it = pending.find(id);
        if (it == pending.end()) {
            if (warn_) warn_("external evaluator: unknown request_id '" + id + "'");
            continue;
        }
        const std::size_t index = it->second;
        pending.erase(it);
        double value = 0.0;
        if (response.value("status", std::string()) == "ok" && response.contains("fitness") &&
            response["fitness"].is_number()) {
            value = response["fitness"].get<double>();
            if (!(value >= 0.0 && value <= 1.0)) {
                if (warn_) warn_("external evaluator: fitness out of [0,1] for " + id);
                value = 0.0;
            }
        } else if (warn_) {
            warn_("external evaluator: " + id + " failed: " +
                  response.value("message", std::string("no message")));
        }
        fitness[index] = value;
        if (log_) {
            const double secs = std::chrono::duration<double>(Clock::now() - start).count();
            log_({generation, hashes[index], value, secs, false, false, false});
        }
    }
    return fitness;
}

} // namespace cgpnas
