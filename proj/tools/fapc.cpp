#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "fapc/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fapc::ConfigError("cannot open config file \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fapc::ConfigError("cannot write file \"" + path + "\"");
  out << text;
}

int thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  int threads = static_cast<int>(hw);
  if (const char* cap = std::getenv("FAPC_THREADS")) {
    const int parsed = std::atoi(cap);
    if (parsed >= 1) threads = std::min(threads, parsed);
  }
  return threads;
}

struct SubArgs {
  std::string config_path;
  std::string out_path;
  long long seed = 0;
  CLI::App* cmd = nullptr;
};

SubArgs* attach(CLI::App& app, SubArgs& args, const char* name, const char* blurb) {
  args.cmd = app.add_subcommand(name, blurb);
  args.cmd->add_option("--config", args.config_path, "JSON run configuration")->required();
  args.cmd->add_option("--out", args.out_path, "CSV output path");
  args.cmd->add_option("--seed", args.seed, "override the config seed");
  return &args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-approximate controllability toolkit for the spectral heat model"};
  app.require_subcommand(1);

  SubArgs verify, steer, semilinear, sweep;
  attach(app, verify, "verify", "run the operator identity checks on the configured Gramian");
  attach(app, steer, "steer", "linear steering rows over the epsilon grid");
  attach(app, semilinear, "semilinear", "fixed-point semilinear steering study");
  attach(app, sweep, "sweep", "vanishing-norm table over the epsilon grid");

  CLI11_PARSE(app, argc, argv);

  SubArgs* active = nullptr;
  for (SubArgs* candidate : {&verify, &steer, &semilinear, &sweep}) {
    if (candidate->cmd->parsed()) active = candidate;
  }

  try {
    fapc::RunConfig config = fapc::parse_config(read_file(active->config_path));
    if (active->cmd->count("--seed") > 0) {
      if (active->seed < 0) throw fapc::ConfigError("seed must be a nonnegative integer");
      config.seed = static_cast<uint64_t>(active->seed);
    }

    fapc::RunOutput out;
    if (active == &verify) {
      out = fapc::run_verify(config);
    } else if (active == &steer) {
      out = fapc::run_steer(config);
    } else if (active == &semilinear) {
      out = fapc::run_semilinear(config, thread_budget());
    } else {
      out = fapc::run_sweep(config);
    }

    std::cout << out.report;

    std::string csv_path = active->out_path.empty() ? config.csv_path : active->out_path;
    if (!csv_path.empty()) {
      write_file(csv_path, out.csv);
    } else if (active != &verify) {
      std::cout << "\n" << out.csv;
    }
    if (!config.report_path.empty()) write_file(config.report_path, out.report);

    if (out.exit_code == fapc::kExitFailure && !out.failure.empty()) {
      std::cerr << "verification failed: " << out.failure << "\n";
    }
    return out.exit_code;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return fapc::kExitFailure;
  }
}
